#include "CLI11.hpp"

#include "trajgen/checkpoint.hpp"
#include "trajgen/evaluation.hpp"
#include "trajgen/text.hpp"
#include "trajgen/training.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace trajgen;
namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void add_config_options(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", common.overrides, "Override a config key (key=value), repeatable");
}

/// File (or defaults), then --set overrides, then --seed.
Config resolve_config(const Common& common, Config base = {}) {
  Config cfg = common.config_path.empty() ? base : load_config(common.config_path);
  for (const auto& o : common.overrides) apply_override(cfg, o);
  if (common.seed) cfg.seed = *common.seed;
  cfg.validate();
  return cfg;
}

std::vector<TrajectoryWindow> load_windows(const std::vector<Scene>& scenes, const Config& cfg) {
  std::vector<TrajectoryWindow> windows;
  for (const auto& s : scenes) {
    auto w = build_windows(s, cfg.data.history, cfg.data.future);
    windows.insert(windows.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return windows;
}

int run_synth(const Common& common, const std::string& spec, int agents, const std::string& out) {
  const Config cfg = resolve_config(common);
  const int h = cfg.data.history, f = cfg.data.future;
  Scene scene;
  if (spec == "two-goal") {
    SynthSpec s = two_goal_spec(agents > 0 ? agents : 200, cfg.seed, h, f);
    s.dt = cfg.data.dt;
    scene = synth_scene(s);
  } else if (spec == "straight") {
    SynthSpec s = straight_spec(agents > 0 ? agents : 10, cfg.seed, h, f);
    s.dt = cfg.data.dt;
    scene = synth_scene(s);
  } else {
    CurvySpec s;
    if (agents > 0) s.windows = (agents + s.agents_per_window - 1) / s.agents_per_window;
    s.seed = cfg.seed;
    s.history = h;
    s.future = f;
    s.dt = cfg.data.dt;
    scene = synth_curvy_scene(s);
  }
  const std::string header = "synthetic " + spec + " seed " + std::to_string(cfg.seed);
  text::write_file((fs::path(out) / (scene.source + ".txt")).string(), serialize_scene(scene, header));
  std::cout << "wrote " << scene.observation_count() << " observations to "
            << (fs::path(out) / (scene.source + ".txt")).string() << '\n';
  return 0;
}

int run_train(const Common& common, const std::string& data, const std::string& holdout,
              const std::string& out, std::string log_path, std::optional<int> epochs) {
  Config cfg = resolve_config(common);
  if (epochs) {
    cfg.train.epochs = *epochs;
    cfg.validate();
  }
  auto scenes = load_dataset_dir(data, cfg.data.dt);
  if (!holdout.empty()) {
    std::vector<std::string> names;
    for (const auto& s : scenes) names.push_back(s.source);
    const SplitPlan plan = leave_one_out(names, holdout);
    std::erase_if(scenes, [&](const Scene& s) { return s.source == plan.held_out; });
  }
  const auto windows = load_windows(scenes, cfg);
  if (windows.empty()) throw Error("no complete windows in '" + data + "'");

  TrainOptions options;
  options.checkpoint_path = out;
  options.on_epoch = [&](const EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << " total " << text::format_double(r.loss.total) << '\n';
  };
  const TrainResult result = train(windows, cfg, options);
  save_checkpoint(out, result.model, cfg.train.epochs);
  if (log_path.empty()) log_path = out + ".log";
  text::write_file(log_path, serialize_train_log(result.log, cfg));
  std::cout << "trained on " << windows.size() << " windows; checkpoint " << out << '\n';
  return 0;
}

int run_generate(const Common& common, const std::string& ckpt_path, const std::string& data,
                 const std::string& subset, std::optional<int> samples, const std::string& out) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Config cfg = resolve_config(common, ckpt.model.config);
  if (samples) {
    cfg.gen.samples = *samples;
    if (cfg.gen.max_attempts < cfg.gen.samples) cfg.gen.max_attempts = 10 * cfg.gen.samples;
    cfg.validate();
  }
  // Generation settings come from the resolved config; the network keeps its own.
  auto scenes = load_dataset_dir(data, cfg.data.dt);
  if (!subset.empty()) {
    std::erase_if(scenes, [&](const Scene& s) { return s.source != subset; });
    if (scenes.empty()) throw Error("no subset named '" + subset + "' in '" + data + "'");
  }
  const auto windows = load_windows(scenes, ckpt.model.config);
  if (windows.empty()) throw Error("no complete windows in '" + data + "'");
  const auto sets = generate_sets(windows, ckpt.model, cfg.gen, cfg.seed, common.threads);
  const std::string config_text = serialize_config(cfg);
  int degraded = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    degraded += sets[i].degraded ? 1 : 0;
    text::write_file((fs::path(out) / samples_file_name(windows[i].source, windows[i].anchor)).string(),
                     serialize_samples(windows[i], sets[i], config_text));
  }
  std::cout << "generated " << windows.size() << " windows (" << degraded << " degraded) in " << out
            << '\n';
  return 0;
}

bool has_extension(const std::string& dir, const char* ext) {
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) return true;
  }
  return false;
}

int run_evaluate(const Common& common, const std::string& ref, const std::string& gen,
                 const std::string& out) {
  const Config cfg = resolve_config(common);
  const auto reference = load_dataset_dir(ref, cfg.data.dt);
  if (!fs::is_directory(gen)) throw Error("not a directory: '" + gen + "'");
  const auto generated = has_extension(gen, ".samples")
                             ? load_samples_dir(gen)
                             : windows_as_samples(load_dataset_dir(gen, cfg.data.dt),
                                                  cfg.data.history, cfg.data.future);
  const MetricReport report = evaluate(reference, generated, cfg);
  const std::string text_report = serialize_report(report, cfg);
  if (out.empty()) {
    std::cout << text_report;
  } else {
    text::write_file(out, text_report);
    text::write_file(out + ".hist", serialize_histograms(report));
    std::cout << "report written to " << out << '\n';
  }
  return 0;
}

int run_inspect(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  std::cout << "format_version " << kCheckpointFormatVersion << '\n'
            << "epochs " << ckpt.epochs_trained << '\n'
            << "parameters " << ckpt.model.parameter_count() << '\n';
  for (const auto* p : ckpt.model.parameters()) {
    std::cout << "param " << p->name << ' ' << p->value.rows() << 'x' << p->value.cols() << " norm "
              << text::format_double(static_cast<double>(p->value.norm())) << '\n';
  }
  std::cout << serialize_config(ckpt.model.config);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent trajectory generation: train, sample and evaluate"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--threads", common.threads, "Worker threads for generation")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", common.seed, "Seed for all randomness (overrides rng.seed)");
  app.set_version_flag("--version",
                       std::string("trajgen ") + "1.0.0" +
                           "\ncheckpoint_format " + std::to_string(kCheckpointFormatVersion) +
                           "\nsamples_format " + std::to_string(kSamplesFormatVersion) +
                           "\nreport_format " + std::to_string(kReportFormatVersion) +
                           "\ntrainlog_format " + std::to_string(kTrainLogFormatVersion));

  std::string spec = "two-goal", out, data, holdout, log_path, ckpt, subset, ref, gen;
  int agents = 0;
  std::optional<int> epochs, samples;

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  synth->add_option("--spec", spec, "Scenario")
      ->check(CLI::IsMember({"two-goal", "straight", "curvy"}));
  synth->add_option("--agents", agents, "Number of agents")->check(CLI::PositiveNumber);
  synth->add_option("--out", out, "Output directory")->required();
  add_config_options(synth, common);

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", data, "Dataset directory of *.txt files")->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("--holdout", holdout, "Subset left out of training");
  train_cmd->add_option("--out", out, "Checkpoint path")->required();
  train_cmd->add_option("--log", log_path, "Training log path (default <out>.log)");
  train_cmd->add_option("--epochs", epochs, "Override train.epochs")->check(CLI::NonNegativeNumber);
  add_config_options(train_cmd, common);

  auto* generate_cmd = app.add_subcommand("generate", "Sample futures for every window");
  generate_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  generate_cmd->add_option("--data", data, "Dataset directory")->required()
      ->check(CLI::ExistingDirectory);
  generate_cmd->add_option("--subset", subset, "Only this subset");
  generate_cmd->add_option("--samples", samples, "Samples per window")->check(CLI::PositiveNumber);
  generate_cmd->add_option("--out", out, "Output directory")->required();
  add_config_options(generate_cmd, common);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score generated samples against data");
  evaluate_cmd->add_option("--ref", ref, "Reference dataset directory")->required()
      ->check(CLI::ExistingDirectory);
  evaluate_cmd->add_option("--gen", gen, "Samples directory or dataset directory")->required()
      ->check(CLI::ExistingDirectory);
  evaluate_cmd->add_option("--out", out, "Report path (histograms go to <out>.hist)");
  add_config_options(evaluate_cmd, common);

  auto* inspect = app.add_subcommand("inspect-ckpt", "Print checkpoint contents");
  inspect->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*synth) return run_synth(common, spec, agents, out);
    if (*train_cmd) return run_train(common, data, holdout, out, log_path, epochs);
    if (*generate_cmd) return run_generate(common, ckpt, data, subset, samples, out);
    if (*evaluate_cmd) return run_evaluate(common, ref, gen, out);
    if (*inspect) return run_inspect(ckpt);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << '\n';
    return 1;
  }
  return 1;
}
