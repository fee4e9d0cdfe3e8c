#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gtpo/advantage.hpp"
#include "gtpo/embedding.hpp"
#include "gtpo/env.hpp"
#include "gtpo/objective.hpp"
#include "gtpo/rewards.hpp"

namespace gtpo {

enum class Algo { grpo, gtpo };

struct TrainConfig {
  Algo algo = Algo::gtpo;
  int group_size = 8;
  int prompts_per_step = 16;
  double gamma = 0.9;
  ShapingConfig shaping;
  ClipConfig clip;
  RolloutLimits limits;
  FeatureSpec policy;
  // Toy-scale default; the reference setup for full-size models uses 1e-6.
  double learning_rate = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int steps = 300;
  std::uint64_t seed = 0;
  double std_floor = kDefaultStdFloor;
  bool degenerate_group_filter = false;
  double rollout_temperature = 1.0;
  int epochs_per_batch = 1;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  // Initialize from the scripted format demonstrator (the stand-in for a
  // cold-start fine-tune). Without it the -0.1 format penalties reward
  // ending the episode immediately and training freezes at zero variance.
  bool warm_start = true;
  int warm_start_examples = 2000;
};

struct MetricsRow {
  int step = 0;
  double train_accuracy = 0.0;
  double code_ratio = 0.0;
  double format_correctness = 0.0;
  double mean_reward = 0.0;
  double mean_turns = 0.0;
  double clipped_fraction = 0.0;
  double objective_value = 0.0;
};

/// Column names, in the order rows are serialized.
const std::vector<std::string>& metrics_columns();
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

/// Reward/advantage audit for one trajectory, exactly as the trainer consumed
/// it. The analyze command recomputes these records from a trajectory log
/// through this same function.
struct TrajectoryAnalysis {
  std::vector<TurnReward> turn_rewards;  // rule rewards before shaping
  double shaped_final_r_acc = 0.0;
  std::vector<double> shaped_totals;     // turn totals with the shaped r_acc
  std::vector<double> returns;
  std::vector<double> gtpo_advantages;   // per turn
  double sequence_reward = 0.0;
  double grpo_advantage = 0.0;
};

struct GroupAnalysis {
  std::vector<TrajectoryAnalysis> members;
  bool degenerate = false;  // all sequence rewards equal
};

struct AnalysisConfig {
  Algo algo = Algo::gtpo;
  double gamma = 0.9;
  ShapingConfig shaping;
  double std_floor = kDefaultStdFloor;
  EmbeddingClient* embedder = nullptr;
};

GroupAnalysis analyze_group(const Group& group, const AnalysisConfig& cfg);

/// Serialized audit record (JSON, one line); sample_idx names the member.
std::string analysis_record(const Group& group, std::size_t sample_idx,
                            const TrajectoryAnalysis& a);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  static AdamState zeros(std::size_t n);
};

/// Bias-corrected Adam ascent step: params += lr * mhat / (sqrt(vhat) + eps).
void adam_update(std::vector<double>& params, std::span<const double> grad,
                 AdamState& state, double lr, double beta1, double beta2,
                 double eps);

/// G independent rollouts of one task under frozen parameters, each on its
/// own derived random stream.
Group collect_group(const PolicyParams& params, const Task& task,
                    const TrainConfig& cfg, std::mt19937_64& rng,
                    std::int64_t prompt_id = 0, std::int64_t group_id = 0);

struct StepOutput {
  MetricsRow metrics;
  std::vector<Group> groups;
  std::vector<GroupAnalysis> analyses;
  bool aborted = false;           // non-finite gradient; params untouched
  std::string diagnostic;
  std::size_t feedback_gradient_reads = 0;
};

/// Reward/advantage/objective wiring plus the Adam ascent for already
/// collected groups: turn rewards -> shaping -> returns -> advantages ->
/// token broadcast -> gradient -> update.
StepOutput update_from_groups(PolicyParams& params, std::vector<Group> groups,
                              const TrainConfig& cfg, AdamState& adam, int step_index,
                              EmbeddingClient* embedder = nullptr);

/// One full pipeline pass: rollouts, then update_from_groups.
StepOutput train_step(PolicyParams& params, std::span<const Task> tasks,
                      const TrainConfig& cfg, AdamState& adam, std::mt19937_64& rng,
                      int step_index, EmbeddingClient* embedder = nullptr);

/// Greedy-decoding accuracy over freshly generated tasks.
double evaluate(const PolicyParams& params, int n_tasks, std::uint64_t seed,
                const RolloutLimits& limits);

struct TrainSinks {
  std::function<void(const MetricsRow&)> on_metrics;
  std::function<void(const StepOutput&)> on_step;
  std::function<void(const PolicyParams&, std::uint64_t step)> on_checkpoint;
};

struct TrainResult {
  PolicyParams params;
  std::vector<MetricsRow> metrics;
  std::size_t feedback_gradient_reads = 0;
};

TrainResult train(const TrainConfig& cfg, const TrainSinks& sinks = {},
                  EmbeddingClient* embedder = nullptr);

}  // namespace gtpo
