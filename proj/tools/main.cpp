// Command-line front end: dataset generation, training, evaluation, the
// ablation suite and the gradient-check verifier.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evseg/checkpoint.hpp"
#include "evseg/common.hpp"
#include "evseg/dataset.hpp"
#include "evseg/keyval.hpp"
#include "evseg/train.hpp"
#include "evseg/verify.hpp"

namespace fs = std::filesystem;
using namespace evseg;

namespace {

struct GenDataArgs {
  std::string out;
  int objects = 2;
  std::string light = "normal";
  std::string trajectory = "rotational";
  std::string speed = "slow";
  std::string distance = "near";
  uint64_t seed = 1;
  int count = 1;
  int frames = 6;
  int size = 256;
  int subframes = 8;
  double threshold = 0.2;
  bool csv_events = false;
};

int cmd_gen_data(const GenDataArgs& a) {
  for (int i = 0; i < a.count; ++i) {
    SceneSpec spec;
    spec.num_objects = a.objects;
    spec.light = light_from_string(a.light);
    spec.trajectory = trajectory_from_string(a.trajectory);
    spec.speed = speed_from_string(a.speed);
    spec.distance = distance_from_string(a.distance);
    spec.seed = a.seed + uint64_t(i);
    spec.height = spec.width = a.size;
    spec.subframes = a.subframes;
    spec.dvs_threshold = a.threshold;

    char name[64];
    std::snprintf(name, sizeof name, "seq_%05llu", (unsigned long long)spec.seed);
    const std::string dir = a.out + "/" + name;
    const LabeledSequence seq = generate_sequence(spec, a.frames);
    write_sequence(dir, seq);
    if (a.csv_events) write_events_csv(dir + "/events.csv", seq.events);
    std::printf("%s: %d frames, %zu events\n", dir.c_str(), seq.n_frames,
                seq.events.size());
  }
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets) {
  KeyValueConfig kv = config_path.empty() ? KeyValueConfig()
                                          : KeyValueConfig::parse_file(config_path);
  for (const std::string& s : sets) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    kv.set(s.substr(0, eq), s.substr(eq + 1));
  }
  const TrainConfig cfg = TrainConfig::from_keyvalues(kv);
  const TrainResult res = train(cfg);
  std::printf("trained %lld steps, final loss %.6f\ncheckpoint: %s\nmetrics: %s\n",
              (long long)res.steps, res.final_loss, res.checkpoint_path.c_str(),
              res.metrics_csv_path.c_str());
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data,
             const std::string& by, const std::string& out,
             const std::string& precision) {
  const Dataset ds = load_dataset(data);
  EvalReport report;
  if (precision_from_string(precision) == Precision::kF32) {
    const Model<float> model = load_checkpoint<float>(checkpoint);
    report = evaluate(model, ds, by);
  } else {
    const Model<double> model = load_checkpoint<double>(checkpoint);
    report = evaluate(model, ds, by);
  }
  if (!report.aggregate) {
    std::fprintf(stderr, "eval: dataset at %s holds no samples\n", data.c_str());
    return kExitData;
  }
  std::fputs(report.to_table().c_str(), stdout);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw DataError("eval: cannot write " + out);
    f << report.to_csv();
  }
  return kExitOk;
}

int cmd_ablate(SuiteConfig cfg) {
  const SuiteResult res = run_condition_suite(cfg);
  std::fputs(res.table.c_str(), stdout);
  return res.all_pass() ? kExitOk : kExitNumeric;
}

int cmd_grad_check(int instances, double tol, uint64_t seed) {
  const std::vector<GradCheckReport> reports = run_gradient_suite(instances, tol, seed);
  for (const GradCheckReport& r : reports)
    std::printf("%-28s %2d instances  max rel err %.3e  %s\n", r.name.c_str(),
                r.instances, r.max_rel_err, r.pass ? "ok" : "FAIL");
  return all_pass(reports) ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bimodal event+RGB segmentation engine"};
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate synthetic sequences");
  gen_cmd->add_option("--out", gen.out, "output dataset directory")->required();
  gen_cmd->add_option("--objects", gen.objects, "objects in the scene (1-10)");
  gen_cmd->add_option("--light", gen.light, "normal|low");
  gen_cmd->add_option("--trajectory", gen.trajectory,
                      "linear|rotational|partial_rotational");
  gen_cmd->add_option("--speed", gen.speed, "slow|medium|fast");
  gen_cmd->add_option("--distance", gen.distance, "near|far");
  gen_cmd->add_option("--seed", gen.seed, "scene seed of the first sequence");
  gen_cmd->add_option("--count", gen.count, "number of sequences (seeds increment)");
  gen_cmd->add_option("--frames", gen.frames, "frames per sequence");
  gen_cmd->add_option("--size", gen.size, "frame height and width");
  gen_cmd->add_option("--subframes", gen.subframes, "DVS sub-frame factor");
  gen_cmd->add_option("--threshold", gen.threshold, "DVS contrast threshold");
  gen_cmd->add_flag("--csv-events", gen.csv_events, "also write events.csv");

  std::string train_config;
  std::vector<std::string> train_sets;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", train_config, "key/value config file");
  train_cmd->add_option("--set", train_sets, "override, e.g. --set train.lr=0.01");

  std::string eval_checkpoint, eval_data, eval_by, eval_out, eval_precision = "f32";
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--by", eval_by, "objects|light|trajectory|speed|distance");
  eval_cmd->add_option("--out", eval_out, "write the report CSV here");
  eval_cmd->add_option("--precision", eval_precision, "f32|f64");

  SuiteConfig suite;
  std::vector<uint64_t> suite_seeds;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "train + compare all four architectures");
  ablate_cmd->add_option("--out", suite.out_dir, "report directory");
  ablate_cmd->add_option("--seeds", suite_seeds, "suite seeds (default 1 2 3)");
  ablate_cmd->add_option("--size", suite.scene_size, "scene size");
  ablate_cmd->add_option("--epochs", suite.epochs, "epochs per run");
  ablate_cmd->add_option("--batch", suite.batch_size, "batch size");
  ablate_cmd->add_option("--classes", suite.num_classes, "class count");

  int gc_instances = 20;
  double gc_tol = 1e-4;
  uint64_t gc_seed = 20240601;
  CLI::App* gc_cmd =
      app.add_subcommand("grad-check", "finite-difference gradient verification");
  gc_cmd->add_option("--instances", gc_instances, "random instances per check");
  gc_cmd->add_option("--tol", gc_tol, "relative tolerance");
  gc_cmd->add_option("--seed", gc_seed, "suite seed");

  try {
    app.parse(argc, argv);
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(train_config, train_sets);
    if (*eval_cmd)
      return cmd_eval(eval_checkpoint, eval_data, eval_by, eval_out, eval_precision);
    if (*ablate_cmd) {
      if (!suite_seeds.empty()) suite.seeds = suite_seeds;
      return cmd_ablate(suite);
    }
    if (*gc_cmd) return cmd_grad_check(gc_instances, gc_tol, gc_seed);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}
