#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evseg/dataset.hpp"
#include "evseg/keyval.hpp"
#include "evseg/metrics.hpp"
#include "evseg/model.hpp"

namespace evseg {

enum class Precision { kF32, kF64 };
std::string to_string(Precision p);
Precision precision_from_string(const std::string& s);

// Cartesian condition matrix expanded into SceneSpecs for generation.
struct DataMatrixSpec {
  std::vector<int> objects = {2};
  std::vector<std::string> lights = {"normal"};
  std::vector<std::string> trajectories = {"rotational"};
  std::vector<std::string> speeds = {"slow"};
  std::vector<std::string> distances = {"near"};
  std::vector<uint64_t> scene_seeds = {1, 2, 3};
  int frames_per_scene = 4;
  int scene_size = 128;
};

std::vector<SceneSpec> expand_matrix(const DataMatrixSpec& m);
Dataset generate_dataset(const DataMatrixSpec& m);

struct TrainConfig {
  ArchKind kind = ArchKind::kBimodal;
  ModelConfig model;
  double lr = 0.001;    // paper recipe
  int batch_size = 30;  // paper recipe; reducible for desk scale
  int epochs = 100;     // paper recipe
  int max_steps = 0;    // optional hard cap on optimizer steps (0 = none)
  uint64_t seed = 1;
  Precision precision = Precision::kF32;
  int checkpoint_interval = 0;  // optimizer steps between checkpoints; 0 = final only
  std::string out_dir = "runs/default";
  std::string data_dir;  // load from disk when set, otherwise generate `matrix`
  DataMatrixSpec matrix;
  std::string split = "auto";  // auto (80/10/10 by scene seed) | none
  int event_clip = 4;

  void validate() const;
  static TrainConfig from_keyvalues(const KeyValueConfig& kv);
};

// Fixed column order for downstream plotting. wall_ms is observational and
// is the one column excluded from bit-identity comparisons.
constexpr const char* kMetricsCsvHeader = "step,epoch,split,loss,pixel_acc,miou,wall_ms";

struct MetricsRow {
  int64_t step = 0;
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double pixel_acc = 0.0;
  double miou = 0.0;
  double wall_ms = 0.0;
};

std::string metrics_rows_to_csv(const std::vector<MetricsRow>& rows);

// 80/10/10 split keyed on the scene seed (buckets 0-7 train, 8 val, 9 test);
// mode "none" routes everything to train.
struct SplitDataset {
  Dataset train, val, test;
};
SplitDataset split_dataset(const Dataset& all, const std::string& mode);

template <typename T>
struct TrainOutput {
  Model<T> model;
  std::vector<MetricsRow> log;
  int64_t steps = 0;
};

// Core loop: forward, fused softmax cross-entropy, backward, adam_step.
// Deterministic per (config, seed). Throws NumericError on a non-finite loss
// (any checkpoint already written stays on disk). checkpoint_dir may be
// empty to skip all checkpoint writes (in-memory use).
template <typename T>
TrainOutput<T> train_model(const TrainConfig& cfg, const Dataset& train_set,
                           const Dataset& val_set, const std::string& checkpoint_dir);

struct TrainResult {
  std::string checkpoint_path;
  std::string metrics_csv_path;
  int64_t steps = 0;
  double final_loss = 0.0;
};

// Full pipeline: dataset load/generation, split, precision dispatch, output
// files under cfg.out_dir.
TrainResult train(const TrainConfig& cfg);

// --- evaluation --------------------------------------------------------------

// Lowest class index wins argmax ties.
template <typename T>
ClassGrid argmax_channels(const Tensor<T>& logits);

// Patch-wise inference (dropout off): patchify -> forward -> unpatchify the
// logit planes (last writer wins on overlaps) -> argmax.
template <typename T>
ClassGrid predict_sample(const Model<T>& model, const DataSample& sample,
                         int event_clip = 4);

struct EvalRow {
  std::string condition;
  int samples = 0;
  double pixel_acc = 0.0;
  double miou = 0.0;     // background included
  double miou_fg = 0.0;  // background excluded
  ConfusionCounts counts;
};

struct EvalReport {
  std::string axis;  // empty, or objects|light|trajectory|speed|distance
  std::vector<EvalRow> rows;
  std::optional<EvalRow> aggregate;  // recomputed from summed confusion counts

  std::string to_csv() const;
  std::string to_table() const;
};

template <typename T>
EvalReport evaluate(const Model<T>& model, const Dataset& ds, const std::string& by_axis,
                    int event_clip = 4);

// --- ablation / condition suite ----------------------------------------------

struct SuiteConfig {
  int scene_size = 64;
  std::vector<int> widths = {4, 8, 16, 32};
  std::vector<int> rgb_aspp_rates = {1, 2, 3};
  std::vector<int> event_aspp_rates = {1};
  int num_classes = 11;
  std::vector<uint64_t> seeds = {1, 2, 3};
  int frames_per_scene = 4;
  int train_reps = 2;  // scenes per (objects x trajectory) training combo
  int test_reps = 4;   // scenes per test condition
  int epochs = 16;
  int batch_size = 4;
  double lr = 0.001;
  int event_clip = 4;
  Precision precision = Precision::kF32;
  std::string out_dir;  // optional; reports written when set
};

struct SuiteVerdict {
  std::string name;
  bool pass = false;
  std::string details;
};

struct SuiteResult {
  // architecture -> condition -> per-seed mIoU
  std::map<std::string, std::map<std::string, std::vector<double>>> miou;
  std::vector<SuiteVerdict> verdicts;
  std::string table;

  bool all_pass() const {
    for (const SuiteVerdict& v : verdicts)
      if (!v.pass) return false;
    return true;
  }
};

// Trains all four architectures on matched data per seed and evaluates the
// low-light and occlusion axes, mirroring the paper's robustness experiments
// directionally.
SuiteResult run_condition_suite(const SuiteConfig& cfg);

}  // namespace evseg
