#include "evseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evseg/common.hpp"
#include "evseg/rng.hpp"

namespace evseg {

std::string to_string(Light v) { return v == Light::kNormal ? "normal" : "low"; }
std::string to_string(Trajectory v) {
  switch (v) {
    case Trajectory::kLinear: return "linear";
    case Trajectory::kRotational: return "rotational";
    default: return "partial_rotational";
  }
}
std::string to_string(SpeedLevel v) {
  switch (v) {
    case SpeedLevel::kSlow: return "slow";
    case SpeedLevel::kMedium: return "medium";
    default: return "fast";
  }
}
std::string to_string(Distance v) { return v == Distance::kNear ? "near" : "far"; }

Light light_from_string(const std::string& s) {
  if (s == "normal") return Light::kNormal;
  if (s == "low") return Light::kLow;
  throw std::invalid_argument("unknown light condition '" + s + "'");
}
Trajectory trajectory_from_string(const std::string& s) {
  if (s == "linear") return Trajectory::kLinear;
  if (s == "rotational") return Trajectory::kRotational;
  if (s == "partial_rotational") return Trajectory::kPartialRotational;
  throw std::invalid_argument("unknown trajectory '" + s + "'");
}
SpeedLevel speed_from_string(const std::string& s) {
  if (s == "slow") return SpeedLevel::kSlow;
  if (s == "medium") return SpeedLevel::kMedium;
  if (s == "fast") return SpeedLevel::kFast;
  throw std::invalid_argument("unknown speed '" + s + "'");
}
Distance distance_from_string(const std::string& s) {
  if (s == "near") return Distance::kNear;
  if (s == "far") return Distance::kFar;
  throw std::invalid_argument("unknown distance '" + s + "'");
}

double speed_px_per_frame(const SceneSpec& spec) {
  if (spec.speed_px_override >= 0.0) return spec.speed_px_override;
  switch (spec.speed) {
    case SpeedLevel::kSlow: return 1.0;
    case SpeedLevel::kMedium: return 2.0;
    default: return 6.0;
  }
}

double distance_scale(Distance d) { return d == Distance::kNear ? 1.0 : 0.75; }

// ---------------------------------------------------------------------------
// scene rendering

namespace {

enum class ShapeKind { kRect, kEllipse, kTriangle };

struct SceneObject {
  ShapeKind kind;
  double cx, cy;       // center in pixels (before scene motion)
  double rx, ry;       // half extents in pixels
  double angle;        // own orientation
  float color[3];
  double tex_fx, tex_fy, tex_px, tex_py;  // texture frequency/phase
};

// Ten visually distinct object colors; object identity k always renders with
// palette entry k-1 so instance ids stay learnable across scenes.
constexpr float kPalette[10][3] = {
    {0.85f, 0.15f, 0.15f}, {0.15f, 0.75f, 0.20f}, {0.20f, 0.30f, 0.90f},
    {0.90f, 0.85f, 0.15f}, {0.85f, 0.20f, 0.80f}, {0.15f, 0.80f, 0.80f},
    {0.95f, 0.55f, 0.15f}, {0.55f, 0.20f, 0.85f}, {0.60f, 0.85f, 0.35f},
    {0.95f, 0.60f, 0.70f},
};

struct Motion {
  // rigid transform applied to the object layer at a given time
  double dx = 0.0, dy = 0.0;
  double angle = 0.0;  // about the image center
};

Motion scene_motion(const SceneSpec& spec, double tau_frames, int n_frames,
                    double dir_x, double dir_y) {
  Motion m;
  const double v = speed_px_per_frame(spec);
  const double span = std::min(spec.height, spec.width);
  // center the sweep on the middle of the sequence so objects stay in frame
  const double tc = tau_frames - 0.5 * double(n_frames - 1);
  switch (spec.trajectory) {
    case Trajectory::kLinear:
      m.dx = v * tc * dir_x;
      m.dy = v * tc * dir_y;
      break;
    case Trajectory::kRotational: {
      const double omega = v / (0.35 * span);  // rad/frame
      m.angle = omega * tc;
      break;
    }
    case Trajectory::kPartialRotational: {
      const double omega = v / (0.35 * span);
      // oscillate: forward for 2 frames, back for 2
      double phase = std::fmod(tau_frames, 4.0);
      if (phase < 0) phase += 4.0;
      m.angle = omega * ((phase < 2.0 ? phase : 4.0 - phase) - 1.0);
      break;
    }
  }
  return m;
}

bool inside_shape(ShapeKind kind, double u, double v) {
  switch (kind) {
    case ShapeKind::kRect: return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
    case ShapeKind::kEllipse: return u * u + v * v <= 1.0;
    default:  // apex-up triangle
      return v >= -1.0 && v <= 1.0 - 2.0 * std::abs(u);
  }
}

std::vector<SceneObject> place_objects(const SceneSpec& spec) {
  if (spec.num_objects < 1 || spec.num_objects > 10)
    throw std::invalid_argument("render_scene: num_objects must be in [1,10]");
  rng::Stream rs(rng::mix(spec.seed, 0xA11CE));
  const double span = std::min(spec.height, spec.width);
  const double scale = distance_scale(spec.distance);

  std::vector<SceneObject> objs;
  for (int k = 1; k <= spec.num_objects; ++k) {
    SceneObject o;
    o.kind = ShapeKind((k - 1) % 3);
    o.rx = scale * span * rs.next_uniform(0.10, 0.16);
    o.ry = o.rx * rs.next_uniform(0.75, 1.25);
    o.angle = rs.next_uniform(0.0, 6.28318530717958648);
    for (int c = 0; c < 3; ++c) o.color[c] = kPalette[k - 1][c];
    o.tex_fx = rs.next_uniform(2.0, 4.0);
    o.tex_fy = rs.next_uniform(2.0, 4.0);
    o.tex_px = rs.next_uniform(0.0, 6.28318530717958648);
    o.tex_py = rs.next_uniform(0.0, 6.28318530717958648);

    // keep centers in the middle 60% so scene motion does not carry objects
    // out of frame; bias later objects towards earlier ones for overlap
    const double margin_x = 0.2 * spec.width;
    const double margin_y = 0.2 * spec.height;
    const double rmax = std::max(o.rx, o.ry);
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      if (!objs.empty() && rs.next_u01() < 0.6) {
        const SceneObject& anchor = objs[size_t(rs.next_below(objs.size()))];
        const double d = (rmax + std::max(anchor.rx, anchor.ry)) *
                         rs.next_uniform(0.5, 1.0);
        const double a = rs.next_uniform(0.0, 6.28318530717958648);
        o.cx = anchor.cx + d * std::cos(a);
        o.cy = anchor.cy + d * std::sin(a);
      } else {
        o.cx = rs.next_uniform(margin_x, spec.width - margin_x);
        o.cy = rs.next_uniform(margin_y, spec.height - margin_y);
      }
      placed = o.cx >= margin_x && o.cx <= spec.width - margin_x &&
               o.cy >= margin_y && o.cy <= spec.height - margin_y;
    }
    if (!placed)
      throw DataError("render_scene: could not place object " + std::to_string(k) +
                      " after 100 attempts");
    objs.push_back(o);
  }
  return objs;
}

}  // namespace

RenderedScene render_scene(const SceneSpec& spec, int n_frames) {
  if (n_frames < 2) throw std::invalid_argument("render_scene: need at least 2 frames");
  if (spec.subframes < 1) throw std::invalid_argument("render_scene: subframes must be >= 1");
  if (spec.height < 16 || spec.width < 16)
    throw std::invalid_argument("render_scene: scene smaller than 16x16");

  RenderedScene out;
  out.h = spec.height;
  out.w = spec.width;
  out.n_frames = n_frames;
  out.subframes = spec.subframes;
  out.spec = spec;

  const int H = spec.height, W = spec.width;
  const int64_t plane = int64_t(H) * W;
  const int k = spec.subframes;
  out.rgb_sharp.assign(size_t(n_frames) * 3 * plane, 0.f);
  out.rgb_blur.assign(size_t(n_frames) * 3 * plane, 0.f);
  out.luminance.assign(size_t(n_frames) * k * plane, 0.f);
  out.masks.assign(size_t(n_frames) * plane, 0);
  out.object_footprint.assign(size_t(n_frames) * spec.num_objects, 0);
  out.timestamps_us.resize(size_t(n_frames));
  for (int i = 0; i < n_frames; ++i) out.timestamps_us[size_t(i)] = int64_t(i) * kDefaultWindowUs;

  const std::vector<SceneObject> objs = place_objects(spec);

  rng::Stream scene_rs(rng::mix(spec.seed, 0x5CE11E));
  const double dir_a = scene_rs.next_uniform(0.0, 6.28318530717958648);
  const double dir_x = std::cos(dir_a), dir_y = std::sin(dir_a);
  // background: gentle diagonal luminance ramp
  const double bg_base = scene_rs.next_uniform(0.30, 0.40);
  const double bg_gx = scene_rs.next_uniform(-0.08, 0.08) / W;
  const double bg_gy = scene_rs.next_uniform(-0.08, 0.08) / H;
  const float bg_tint[3] = {float(scene_rs.next_uniform(0.9, 1.1)),
                            float(scene_rs.next_uniform(0.9, 1.1)),
                            float(scene_rs.next_uniform(0.9, 1.1))};

  std::vector<float> frame_rgb(size_t(3) * plane);
  const double ccx = 0.5 * W, ccy = 0.5 * H;

  for (int fi = 0; fi < n_frames; ++fi) {
    for (int s = 0; s < k; ++s) {
      const double tau = fi + double(s) / k;
      const Motion mo = scene_motion(spec, tau, n_frames, dir_x, dir_y);
      const double ca = std::cos(mo.angle), sa = std::sin(mo.angle);

      // background
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          const float l = float(bg_base + bg_gx * x + bg_gy * y);
          frame_rgb[size_t(y) * W + x] = l * bg_tint[0];
          frame_rgb[plane + size_t(y) * W + x] = l * bg_tint[1];
          frame_rgb[2 * plane + size_t(y) * W + x] = l * bg_tint[2];
        }
      }
      const bool at_frame_time = (s == 0);
      uint8_t* mask = at_frame_time ? out.masks.data() + size_t(fi) * plane : nullptr;
      if (at_frame_time) std::fill(mask, mask + plane, uint8_t(0));

      // objects, draw order = id order; later ids overwrite (occlude)
      for (int oi = 0; oi < int(objs.size()); ++oi) {
        const SceneObject& o = objs[size_t(oi)];
        // object center under the scene motion
        const double wx = ccx + ca * (o.cx - ccx) - sa * (o.cy - ccy) + mo.dx;
        const double wy = ccy + sa * (o.cx - ccx) + ca * (o.cy - ccy) + mo.dy;
        const double rmax = 1.5 * std::max(o.rx, o.ry);
        const int x0 = std::max(0, int(std::floor(wx - rmax)));
        const int x1 = std::min(W - 1, int(std::ceil(wx + rmax)));
        const int y0 = std::max(0, int(std::floor(wy - rmax)));
        const int y1 = std::min(H - 1, int(std::ceil(wy + rmax)));
        const double oa = o.angle + mo.angle;  // object rotates with the scene
        const double oca = std::cos(-oa), osa = std::sin(-oa);
        int64_t fp = 0;
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) {
            const double px = (x + 0.5) - wx, py = (y + 0.5) - wy;
            const double u = (oca * px - osa * py) / o.rx;
            const double v = (osa * px + oca * py) / o.ry;
            if (!inside_shape(o.kind, u, v)) continue;
            ++fp;
            const float tex = float(
                1.0 + 0.06 * std::sin(o.tex_fx * u + o.tex_px) *
                          std::sin(o.tex_fy * v + o.tex_py));
            const size_t pix = size_t(y) * W + x;
            for (int c = 0; c < 3; ++c) {
              float val = o.color[c] * tex;
              frame_rgb[size_t(c) * plane + pix] = std::clamp(val, 0.f, 1.f);
            }
            if (at_frame_time) mask[pix] = uint8_t(oi + 1);
          }
        }
        if (at_frame_time)
          out.object_footprint[size_t(fi) * spec.num_objects + oi] = fp;
      }

      // luminance for the DVS; blur accumulation; sharp frame at s == 0
      float* lum = out.luminance.data() + (size_t(fi) * k + s) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        lum[i] = 0.2126f * frame_rgb[size_t(i)] +
                 0.7152f * frame_rgb[size_t(plane + i)] +
                 0.0722f * frame_rgb[size_t(2 * plane + i)];
      }
      float* blur = out.rgb_blur.data() + size_t(fi) * 3 * plane;
      for (int64_t i = 0; i < 3 * plane; ++i) blur[i] += frame_rgb[size_t(i)] / float(k);
      if (at_frame_time)
        std::copy(frame_rgb.begin(), frame_rgb.end(),
                  out.rgb_sharp.begin() + size_t(fi) * 3 * plane);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// DVS simulation

std::vector<Event> simulate_dvs(const RenderedScene& scene, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("simulate_dvs: threshold must be positive");
  const int H = scene.h, W = scene.w;
  const int64_t plane = int64_t(H) * W;
  const int total = scene.n_frames * scene.subframes;
  const int64_t dt_us = kDefaultWindowUs / scene.subframes;

  const auto log_lum = [](float v) {
    return std::log(std::max(v, 1e-4f));  // epsilon-floored log
  };

  std::vector<float> ref(static_cast<size_t>(plane), 0.f);
  for (int64_t i = 0; i < plane; ++i) ref[size_t(i)] = log_lum(scene.luminance[size_t(i)]);
  std::vector<float> prev = ref;

  std::vector<Event> events;
  for (int j = 1; j < total; ++j) {
    const float* cur_lum = scene.luminance.data() + size_t(j) * plane;
    const int64_t t0 = int64_t(j - 1) * dt_us;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const size_t i = size_t(y) * W + x;
        const float cur = log_lum(cur_lum[i]);
        const float v0 = prev[i];
        if (cur > v0) {
          while (cur - ref[i] >= threshold) {
            ref[i] += float(threshold);
            const double frac = double(ref[i] - v0) / double(cur - v0);
            const int64_t t = t0 + int64_t(std::llround(frac * dt_us));
            events.push_back(Event{uint16_t(x), uint16_t(y), 1, t});
          }
        } else if (cur < v0) {
          while (ref[i] - cur >= threshold) {
            ref[i] -= float(threshold);
            const double frac = double(v0 - ref[i]) / double(v0 - cur);
            const int64_t t = t0 + int64_t(std::llround(frac * dt_us));
            events.push_back(Event{uint16_t(x), uint16_t(y), 0, t});
          }
        }
        prev[i] = cur;
      }
    }
  }
  // generation order is interval-major then row-major; stable sort keeps that
  // order within equal timestamps, so the stream is fully deterministic
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return events;
}

// ---------------------------------------------------------------------------
// degradation (RGB only)

std::vector<uint8_t> degrade(const RenderedScene& scene, const SceneSpec& spec) {
  const int64_t n = int64_t(scene.n_frames) * 3 * scene.h * scene.w;
  std::vector<uint8_t> out(static_cast<size_t>(n), 0);
  rng::Stream noise(rng::mix(spec.seed, 0xDA12C));
  const bool low = spec.light == Light::kLow;
  for (int64_t i = 0; i < n; ++i) {
    double v = scene.rgb_blur[size_t(i)];  // motion blur: sub-frame average
    if (low) v = 0.25 * v + 0.02 * noise.next_normal();
    v = std::clamp(v, 0.0, 1.0);
    out[size_t(i)] = uint8_t(std::lround(v * 255.0));
  }
  return out;
}

LabeledSequence generate_sequence(const SceneSpec& spec, int n_frames) {
  RenderedScene scene = render_scene(spec, n_frames);
  LabeledSequence seq;
  seq.h = scene.h;
  seq.w = scene.w;
  seq.n_frames = scene.n_frames;
  seq.events = simulate_dvs(scene, spec.dvs_threshold);
  seq.rgb = degrade(scene, spec);
  seq.masks = std::move(scene.masks);
  seq.timestamps_us = std::move(scene.timestamps_us);
  seq.object_footprint = std::move(scene.object_footprint);
  seq.spec = spec;
  return seq;
}

// ---------------------------------------------------------------------------
// patchify / unpatchify

std::vector<PatchOrigin> patch_grid(int h, int w, int patch) {
  if (h < 1 || w < 1 || patch < 1)
    throw std::invalid_argument("patch_grid: extents must be positive");
  const auto axis_positions = [patch](int extent) {
    std::vector<int> pos;
    int p = 0;
    while (true) {
      if (p + patch >= extent) {
        pos.push_back(std::max(extent - patch, 0));  // snap to the edge
        break;
      }
      pos.push_back(p);
      p += patch;
    }
    return pos;
  };
  std::vector<PatchOrigin> grid;
  for (int r : axis_positions(h))
    for (int c : axis_positions(w)) grid.push_back(PatchOrigin{r, c});
  return grid;
}

template <typename T>
Patches<T> patchify(const T* img, int channels, int h, int w, int patch) {
  Patches<T> out;
  out.channels = channels;
  out.patch = patch;
  out.origins = patch_grid(h, w, patch);
  out.data.reserve(out.origins.size());
  for (const PatchOrigin& o : out.origins) {
    std::vector<T> buf(size_t(channels) * patch * patch, T(0));
    for (int c = 0; c < channels; ++c) {
      for (int y = 0; y < patch; ++y) {
        const int sy = o.row + y;
        if (sy >= h) break;  // zero padding for small images
        for (int x = 0; x < patch; ++x) {
          const int sx = o.col + x;
          if (sx >= w) break;
          buf[(size_t(c) * patch + y) * patch + x] =
              img[(size_t(c) * h + sy) * w + sx];
        }
      }
    }
    out.data.push_back(std::move(buf));
  }
  return out;
}

template <typename T>
std::vector<T> unpatchify(const Patches<T>& patches, int h, int w) {
  if (patches.origins.size() != patches.data.size())
    throw std::invalid_argument("unpatchify: origin/data count mismatch");
  const int C = patches.channels, P = patches.patch;
  std::vector<T> img(size_t(C) * h * w, T(0));
  std::vector<uint8_t> covered(size_t(h) * w, 0);
  for (size_t pi = 0; pi < patches.origins.size(); ++pi) {
    const PatchOrigin& o = patches.origins[pi];
    const std::vector<T>& buf = patches.data[pi];
    for (int y = 0; y < P; ++y) {
      const int dy = o.row + y;
      if (dy < 0 || dy >= h) continue;
      for (int x = 0; x < P; ++x) {
        const int dx = o.col + x;
        if (dx < 0 || dx >= w) continue;
        covered[size_t(dy) * w + dx] = 1;
        for (int c = 0; c < C; ++c)
          img[(size_t(c) * h + dy) * w + dx] = buf[(size_t(c) * P + y) * P + x];
      }
    }
  }
  for (size_t i = 0; i < covered.size(); ++i)
    if (!covered[i])
      throw std::invalid_argument("unpatchify: pixel " + std::to_string(i) +
                                  " not covered by any patch");
  return img;
}

template Patches<float> patchify<float>(const float*, int, int, int, int);
template Patches<double> patchify<double>(const double*, int, int, int, int);
template Patches<uint8_t> patchify<uint8_t>(const uint8_t*, int, int, int, int);
template std::vector<float> unpatchify<float>(const Patches<float>&, int, int);
template std::vector<double> unpatchify<double>(const Patches<double>&, int, int);
template std::vector<uint8_t> unpatchify<uint8_t>(const Patches<uint8_t>&, int, int);

}  // namespace evseg
