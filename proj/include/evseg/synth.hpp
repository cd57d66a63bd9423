#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evseg/events.hpp"
#include "evseg/tensor.hpp"

namespace evseg {

// Experiment axes mirrored from the capture conditions the network is
// evaluated against: clutter, lighting, arm trajectory, arm speed and
// platform-to-camera distance.
enum class Light { kNormal, kLow };
enum class Trajectory { kLinear, kRotational, kPartialRotational };
enum class SpeedLevel { kSlow, kMedium, kFast };  // 0.15 / 0.3 / 1.0 m/s
enum class Distance { kNear, kFar };              // 62 cm / 82 cm

std::string to_string(Light v);
std::string to_string(Trajectory v);
std::string to_string(SpeedLevel v);
std::string to_string(Distance v);
Light light_from_string(const std::string& s);
Trajectory trajectory_from_string(const std::string& s);
SpeedLevel speed_from_string(const std::string& s);
Distance distance_from_string(const std::string& s);

// Condition vector for one synthetic sequence. The seed fully determines the
// generated data.
struct SceneSpec {
  int num_objects = 2;
  Light light = Light::kNormal;
  Trajectory trajectory = Trajectory::kRotational;
  SpeedLevel speed = SpeedLevel::kSlow;
  Distance distance = Distance::kNear;
  uint64_t seed = 1;
  int height = 256;
  int width = 256;
  int subframes = 8;           // sub-frame interpolation factor for the DVS
  double dvs_threshold = 0.2;  // log-luminance contrast threshold
  // Test hook: pixels/frame scene motion; negative uses the speed mapping.
  double speed_px_override = -1.0;
};

// Physical speeds cannot be mapped to pixels without camera intrinsics;
// translation magnitudes {1, 2, 6} px/frame preserve the 0.15 : 0.3 : 1.0
// ratios.
double speed_px_per_frame(const SceneSpec& spec);
// Apparent object scale for the two platform distances.
double distance_scale(Distance d);

// Clean (pre-degradation) render of one scene: sharp RGB at frame times,
// per-window sub-frame averages for motion blur, sub-frame luminance for the
// DVS, instance masks and unoccluded per-object footprints.
struct RenderedScene {
  int h = 0, w = 0;
  int n_frames = 0;
  int subframes = 1;
  std::vector<float> rgb_sharp;       // [n, 3, H, W], linear [0,1]
  std::vector<float> rgb_blur;        // [n, 3, H, W], mean over sub-frames
  std::vector<float> luminance;       // [n * subframes, H, W], clean
  std::vector<uint8_t> masks;         // [n, H, W], 0 background, 1..K objects
  std::vector<int64_t> timestamps_us; // frame times, spaced 25 ms
  std::vector<int64_t> object_footprint;  // [n, K] unoccluded pixel counts
  SceneSpec spec;

  int64_t footprint(int frame, int object_id) const {
    return object_footprint[size_t(frame) * spec.num_objects + object_id - 1];
  }
};

// Rasterizes num_objects textured primitives under the scene motion implied
// by trajectory/speed; later-drawn objects occlude earlier ones. Throws
// after a bounded number of placement retries if an object cannot fit.
RenderedScene render_scene(const SceneSpec& spec, int n_frames);

// Threshold-crossing DVS model on log luminance with linear interpolation
// inside each sub-frame interval. Returns a time-sorted stream.
std::vector<Event> simulate_dvs(const RenderedScene& scene, double threshold);

// Applies the RGB-only degradations (motion blur via sub-frame averaging,
// low light as 0.25x luminance plus sigma=0.02 read noise) and quantizes to
// 8 bits. Events are generated from the clean luminance, so they are
// unaffected by the light setting.
std::vector<uint8_t> degrade(const RenderedScene& scene, const SceneSpec& spec);

// Final paired product: degraded RGB, instance masks, event stream.
struct LabeledSequence {
  int h = 0, w = 0;
  int n_frames = 0;
  std::vector<uint8_t> rgb;    // [n, 3, H, W]
  std::vector<uint8_t> masks;  // [n, H, W]
  std::vector<Event> events;
  std::vector<int64_t> timestamps_us;
  std::vector<int64_t> object_footprint;  // [n, K]
  SceneSpec spec;
};

LabeledSequence generate_sequence(const SceneSpec& spec, int n_frames);

// --- patchify / unpatchify --------------------------------------------------

struct PatchOrigin {
  int row = 0;
  int col = 0;
};

// Row-major grid of patch origins covering an HxW image with stride = patch;
// the final row/column snaps to the image edge instead of padding, so every
// pixel is covered. Images smaller than the patch get a single origin at 0
// (the patch is zero-padded).
std::vector<PatchOrigin> patch_grid(int h, int w, int patch);

template <typename T>
struct Patches {
  int channels = 0;
  int patch = 0;
  std::vector<PatchOrigin> origins;
  std::vector<std::vector<T>> data;  // each [C, patch, patch]
};

template <typename T>
Patches<T> patchify(const T* img, int channels, int h, int w, int patch);

// Reassembles patches into [C, H, W]. Overlapping regions resolve
// last-writer-wins in patch order; an uncovered pixel is rejected.
template <typename T>
std::vector<T> unpatchify(const Patches<T>& patches, int h, int w);

}  // namespace evseg
