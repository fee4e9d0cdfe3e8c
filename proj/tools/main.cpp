// Command-line front end: train, eval, analyze, sweep.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "gtpo/config.hpp"
#include "gtpo/log_io.hpp"
#include "gtpo/sweep.hpp"

namespace fs = std::filesystem;
using namespace gtpo;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
};

TrainConfig resolve_config(const CommonOpts& opts) {
  TrainConfig cfg;
  if (!opts.config_path.empty()) cfg = load_config_file(opts.config_path);
  for (const std::string& kv : opts.overrides) apply_override(cfg, kv);
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--set", opts.overrides, "key=value override (repeatable)")
      ->take_all();
  cmd->add_option("--out", opts.out_dir, "output directory");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

EmbeddingClient* maybe_embedder(const TrainConfig& cfg,
                                std::optional<EmbeddingClient>& storage) {
  if (cfg.shaping.scorer != Scorer::embedding) return nullptr;
  EmbeddingConfig dummy;
  dummy.base_url = "unset";
  EmbeddingClient client(dummy);
  if (!EmbeddingClient::from_environment(client)) {
    throw std::runtime_error(
        "scorer=embedding requires the GTPO_EMBED_URL environment variable "
        "(optional GTPO_EMBED_AUTH 'Name: value')");
  }
  storage.emplace(std::move(client));
  return &*storage;
}

int cmd_train(const CommonOpts& opts) {
  TrainConfig cfg = resolve_config(opts);
  std::optional<EmbeddingClient> embed_storage;
  EmbeddingClient* embedder = maybe_embedder(cfg, embed_storage);

  fs::create_directories(opts.out_dir);
  auto metrics_out = open_out(fs::path(opts.out_dir) / "metrics.csv");
  auto log_out = open_out(fs::path(opts.out_dir) / "trajectories.jsonl");
  auto analysis_out = open_out(fs::path(opts.out_dir) / "train_analysis.jsonl");
  open_out(fs::path(opts.out_dir) / "config.json") << dump_config(cfg) << "\n";

  metrics_out << metrics_csv_header() << "\n";
  TrainSinks sinks;
  sinks.on_metrics = [&](const MetricsRow& row) {
    metrics_out << metrics_csv_row(row) << "\n";
  };
  sinks.on_step = [&](const StepOutput& step) {
    write_log(step.groups, log_out);
    for (std::size_t g = 0; g < step.groups.size(); ++g) {
      for (std::size_t i = 0; i < step.groups[g].members.size(); ++i) {
        analysis_out << analysis_record(step.groups[g], i, step.analyses[g].members[i])
                     << "\n";
      }
    }
    if (step.aborted) std::cerr << step.diagnostic << "\n";
  };
  sinks.on_checkpoint = [&](const PolicyParams& params, std::uint64_t step) {
    save_checkpoint(params, step,
                    (fs::path(opts.out_dir) / ("ckpt_" + std::to_string(step) + ".bin"))
                        .string());
  };

  TrainResult result = train(cfg, sinks, embedder);
  save_checkpoint(result.params, static_cast<std::uint64_t>(cfg.steps),
                  (fs::path(opts.out_dir) / "final.bin").string());
  std::cout << "final_train_accuracy=" << result.metrics.back().train_accuracy << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint_path, int n_tasks,
             std::uint64_t seed) {
  TrainConfig cfg = resolve_config(opts);
  Checkpoint ck = load_checkpoint(checkpoint_path);
  const double accuracy = evaluate(ck.params, n_tasks, seed, cfg.limits);
  std::cout << "eval_accuracy=" << accuracy << "\n";
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    nlohmann::json j;
    j["checkpoint"] = checkpoint_path;
    j["step"] = ck.step;
    j["n_tasks"] = n_tasks;
    j["seed"] = seed;
    j["accuracy"] = accuracy;
    open_out(fs::path(opts.out_dir) / "eval.json") << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_analyze(const CommonOpts& opts, const std::string& log_path,
                const std::string& report_path) {
  TrainConfig cfg = resolve_config(opts);
  std::optional<EmbeddingClient> embed_storage;
  EmbeddingClient* embedder = maybe_embedder(cfg, embed_storage);

  std::ifstream in(log_path);
  if (!in) throw std::runtime_error("cannot read trajectory log " + log_path);
  std::vector<Group> groups = read_log(in);

  AnalysisConfig acfg;
  acfg.algo = cfg.algo;
  acfg.gamma = cfg.gamma;
  acfg.shaping = cfg.shaping;
  acfg.std_floor = cfg.std_floor;
  acfg.embedder = embedder;

  std::ostream* out = &std::cout;
  std::ofstream file_out;
  if (!report_path.empty()) {
    file_out = open_out(report_path);
    out = &file_out;
  }

  for (const Group& group : groups) {
    if (group.members.size() < 2) {
      std::cerr << "warning: group " << group.group_id
                << " has fewer than 2 members; skipped\n";
      continue;
    }
    for (std::size_t i = 0; i < group.members.size(); ++i) {
      if (!group.members[i].old_logprobs) {
        throw std::runtime_error("analyze: record group_id=" +
                                 std::to_string(group.group_id) + " sample_idx=" +
                                 std::to_string(i) + " is missing old_logprobs");
      }
    }
    const GroupAnalysis analysis = analyze_group(group, acfg);
    for (std::size_t i = 0; i < group.members.size(); ++i) {
      *out << analysis_record(group, i, analysis.members[i]) << "\n";
    }
  }
  return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& parameter,
              std::vector<std::string> values) {
  TrainConfig cfg = resolve_config(opts);
  std::optional<EmbeddingClient> embed_storage;
  EmbeddingClient* embedder = nullptr;
  if (cfg.shaping.scorer == Scorer::embedding || parameter == "scorer" ||
      parameter == "content_scope") {
    // Embedding rows need the endpoint only if they actually run.
    EmbeddingConfig dummy;
    dummy.base_url = "unset";
    EmbeddingClient client(dummy);
    if (EmbeddingClient::from_environment(client)) {
      embed_storage.emplace(std::move(client));
      embedder = &*embed_storage;
    }
  }
  if (values.empty()) values = default_sweep_values(parameter);

  SweepTable table = sweep(cfg, parameter, values, 200, 7, embedder);
  fs::create_directories(opts.out_dir);
  open_out(fs::path(opts.out_dir) / ("sweep_" + parameter + ".csv"))
      << sweep_csv(table);
  const std::string summary = sweep_summary(table);
  open_out(fs::path(opts.out_dir) / ("sweep_" + parameter + ".txt")) << summary;
  std::cout << summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale GTPO/GRPO training on the ToyCalc environment"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  auto* train_cmd = app.add_subcommand("train", "run the RL loop");
  add_common(train_cmd, train_opts);
  for (const char* flag : {"--seed", "--steps", "--gamma", "--alpha"}) {
    // sugar: --seed N == --set seed=N
    train_cmd->add_option_function<std::string>(
        flag,
        [&train_opts, flag](const std::string& v) {
          train_opts.overrides.push_back(std::string(flag + 2) + "=" + v);
        },
        "shortcut for --set " + std::string(flag + 2) + "=VALUE");
  }
  train_cmd->add_option_function<std::string>(
      "--algo",
      [&train_opts](const std::string& v) {
        train_opts.overrides.push_back("algo=" + v);
      },
      "grpo or gtpo");
  train_cmd->add_option_function<std::string>(
      "--scorer",
      [&train_opts](const std::string& v) {
        train_opts.overrides.push_back("scorer=" + v);
      },
      "ratcliff, embedding or none");

  CommonOpts eval_opts;
  std::string checkpoint_path;
  int n_tasks = 500;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "greedy-decoding accuracy of a checkpoint");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval_cmd->add_option("--n-tasks", n_tasks, "number of evaluation tasks");
  eval_cmd->add_option("--seed", eval_seed, "evaluation task seed");

  CommonOpts analyze_opts;
  std::string log_path, report_path;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "offline rewards/advantages from a trajectory log");
  add_common(analyze_cmd, analyze_opts);
  analyze_cmd->add_option("--log", log_path, "trajectory log (jsonl)")->required();
  analyze_cmd->add_option("--report", report_path, "output file (default stdout)");
  for (const char* flag : {"--gamma", "--alpha"}) {
    analyze_cmd->add_option_function<std::string>(
        flag,
        [&analyze_opts, flag](const std::string& v) {
          analyze_opts.overrides.push_back(std::string(flag + 2) + "=" + v);
        },
        "shortcut for --set " + std::string(flag + 2) + "=VALUE");
  }
  analyze_cmd->add_option_function<std::string>(
      "--algo",
      [&analyze_opts](const std::string& v) {
        analyze_opts.overrides.push_back("algo=" + v);
      },
      "grpo or gtpo");
  analyze_cmd->add_option_function<std::string>(
      "--scorer",
      [&analyze_opts](const std::string& v) {
        analyze_opts.overrides.push_back("scorer=" + v);
      },
      "ratcliff, embedding or none");

  CommonOpts sweep_opts;
  std::string parameter;
  std::vector<std::string> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "ablation table over one parameter");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--param", parameter, "parameter to sweep")->required();
  sweep_cmd->add_option("--values", values, "values (default: canonical rows)")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_opts);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts, checkpoint_path, n_tasks, eval_seed);
    if (analyze_cmd->parsed()) return cmd_analyze(analyze_opts, log_path, report_path);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts, parameter, values);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
