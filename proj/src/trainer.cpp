#include "gtpo/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace gtpo {

using nlohmann::json;

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "step",         "train_accuracy",   "code_ratio",
      "format_correctness", "mean_reward", "mean_turns",
      "clipped_fraction",   "objective_value"};
  return cols;
}

std::string metrics_csv_header() {
  std::string out;
  for (const auto& c : metrics_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string metrics_csv_row(const MetricsRow& r) {
  std::string out = std::to_string(r.step);
  for (double v : {r.train_accuracy, r.code_ratio, r.format_correctness, r.mean_reward,
                   r.mean_turns, r.clipped_fraction, r.objective_value}) {
    out += ',';
    out += fmt(v);
  }
  return out;
}

GroupAnalysis analyze_group(const Group& group, const AnalysisConfig& cfg) {
  if (group.members.size() < 2)
    throw std::invalid_argument("analyze_group: group size must be >= 2");

  GroupAnalysis out;
  out.members.resize(group.members.size());

  // Rule rewards, then group-level shaping of the final-turn accuracy.
  const bool shaped = cfg.algo == Algo::gtpo && cfg.shaping.scorer != Scorer::none;
  std::vector<double> shaped_racc;
  if (shaped) {
    shaped_racc = shape_group_rewards(group, cfg.shaping, cfg.embedder);
  }

  std::vector<ReturnVector> returns(group.members.size());
  std::vector<double> seq_rewards(group.members.size());
  for (std::size_t i = 0; i < group.members.size(); ++i) {
    const Trajectory& traj = group.members[i];
    TrajectoryAnalysis& a = out.members[i];
    a.turn_rewards = turn_rewards(traj);
    a.shaped_final_r_acc =
        shaped ? shaped_racc[i] : a.turn_rewards.back().r_acc;
    a.shaped_totals.reserve(a.turn_rewards.size());
    for (std::size_t j = 0; j < a.turn_rewards.size(); ++j) {
      const bool final_turn = j + 1 == a.turn_rewards.size();
      const double racc = final_turn ? a.shaped_final_r_acc : a.turn_rewards[j].r_acc;
      a.shaped_totals.push_back(racc + a.turn_rewards[j].r_format);
    }
    returns[i] = discounted_returns(a.shaped_totals, cfg.gamma);
    a.returns = returns[i].values;
    a.sequence_reward = sequence_reward(traj);
    seq_rewards[i] = a.sequence_reward;
  }

  AdvantageSet adv = gtpo_group_advantages(returns, cfg.std_floor);
  std::vector<double> grpo_adv = grpo_group_advantages(seq_rewards, cfg.std_floor);
  for (std::size_t i = 0; i < group.members.size(); ++i) {
    out.members[i].gtpo_advantages = adv.per_turn[i];
    out.members[i].grpo_advantage = grpo_adv[i];
  }
  out.degenerate = true;
  for (double r : seq_rewards) {
    if (r != seq_rewards.front()) {
      out.degenerate = false;
      break;
    }
  }
  return out;
}

std::string analysis_record(const Group& group, std::size_t sample_idx,
                            const TrajectoryAnalysis& a) {
  json j;
  j["prompt_id"] = group.prompt_id;
  j["group_id"] = group.group_id;
  j["sample_idx"] = sample_idx;
  json turns = json::array();
  for (const TurnReward& r : a.turn_rewards) {
    turns.push_back({{"r_acc", r.r_acc}, {"r_format", r.r_format}, {"total", r.total}});
  }
  j["turn_rewards"] = std::move(turns);
  j["shaped_final_r_acc"] = a.shaped_final_r_acc;
  j["shaped_totals"] = a.shaped_totals;
  j["returns"] = a.returns;
  j["gtpo_advantages"] = a.gtpo_advantages;
  j["sequence_reward"] = a.sequence_reward;
  j["grpo_advantage"] = a.grpo_advantage;
  return j.dump();
}

AdamState AdamState::zeros(std::size_t n) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adam_update(std::vector<double>& params, std::span<const double> grad,
                 AdamState& state, double lr, double beta1, double beta2,
                 double eps) {
  if (params.size() != grad.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_update: shape mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] += lr * mhat / (std::sqrt(vhat) + eps);
  }
}

namespace {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

Group collect_group(const PolicyParams& params, const Task& task,
                    const TrainConfig& cfg, std::mt19937_64& rng,
                    std::int64_t prompt_id, std::int64_t group_id) {
  if (cfg.group_size < 2)
    throw std::invalid_argument("collect_group: group size must be >= 2");
  Group group;
  group.prompt_id = prompt_id;
  group.group_id = group_id;
  group.members.reserve(static_cast<std::size_t>(cfg.group_size));
  for (int i = 0; i < cfg.group_size; ++i) {
    std::mt19937_64 member_rng(splitmix64(rng()));
    group.members.push_back(
        rollout(params, task, cfg.limits, member_rng, cfg.rollout_temperature));
  }
  return group;
}

StepOutput update_from_groups(PolicyParams& params, std::vector<Group> groups,
                              const TrainConfig& cfg, AdamState& adam, int step_index,
                              EmbeddingClient* embedder) {
  StepOutput out;
  out.metrics.step = step_index;
  out.groups = std::move(groups);

  AnalysisConfig acfg;
  acfg.algo = cfg.algo;
  acfg.gamma = cfg.gamma;
  acfg.shaping = cfg.shaping;
  acfg.std_floor = cfg.std_floor;
  acfg.embedder = embedder;
  for (const Group& g : out.groups) out.analyses.push_back(analyze_group(g, acfg));

  // Token-level advantages per group, per the configured algorithm.
  std::vector<std::vector<std::vector<double>>> token_advs(out.groups.size());
  std::vector<bool> contributes(out.groups.size(), true);
  for (std::size_t g = 0; g < out.groups.size(); ++g) {
    const Group& group = out.groups[g];
    const GroupAnalysis& ga = out.analyses[g];
    if (cfg.degenerate_group_filter && ga.degenerate) {
      contributes[g] = false;
      continue;
    }
    if (cfg.algo == Algo::gtpo) {
      AdvantageSet adv;
      adv.std_floor = cfg.std_floor;
      for (const TrajectoryAnalysis& a : ga.members)
        adv.per_turn.push_back(a.gtpo_advantages);
      token_advs[g] = broadcast_to_tokens(adv, group.members);
    } else {
      std::vector<double> member_adv;
      for (const TrajectoryAnalysis& a : ga.members)
        member_adv.push_back(a.grpo_advantage);
      token_advs[g] = broadcast_to_tokens(member_adv, group.members);
    }
  }

  const std::vector<double> params_at_entry = params.theta;
  const AdamState adam_at_entry = adam;
  bool first_epoch = true;
  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    std::vector<double> grad(params.theta.size(), 0.0);
    std::size_t contributing = 0;
    double objective_sum = 0.0;
    std::size_t clipped_tokens = 0;
    std::size_t total_tokens = 0;
    for (std::size_t g = 0; g < out.groups.size(); ++g) {
      if (!contributes[g]) continue;
      GradientReport report = objective_gradient(params, out.groups[g].members,
                                                 token_advs[g], cfg.clip);
      out.feedback_gradient_reads += report.feedback_gradient_reads;
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += report.grad[i];
      ++contributing;
      objective_sum += report.loss.objective_value;
      clipped_tokens += static_cast<std::size_t>(std::llround(
          report.loss.clipped_fraction * static_cast<double>(report.loss.token_count)));
      total_tokens += report.loss.token_count;
    }
    if (contributing == 0) break;
    const double inv_groups = 1.0 / static_cast<double>(contributing);
    for (double& gv : grad) gv *= inv_groups;

    for (double gv : grad) {
      if (!std::isfinite(gv)) {
        out.aborted = true;
        out.diagnostic = "non-finite gradient at step " + std::to_string(step_index) +
                         "; parameters left unchanged";
        break;
      }
    }
    if (out.aborted) {
      params.theta = params_at_entry;
      adam = adam_at_entry;
      break;
    }

    if (first_epoch) {
      out.metrics.objective_value = objective_sum * inv_groups;
      out.metrics.clipped_fraction =
          total_tokens == 0 ? 0.0
                            : static_cast<double>(clipped_tokens) /
                                  static_cast<double>(total_tokens);
      first_epoch = false;
    }
    adam_update(params.theta, grad, adam, cfg.learning_rate, cfg.adam_beta1,
                cfg.adam_beta2, cfg.adam_eps);
  }

  // Telemetry over every rollout of the step.
  std::size_t n = 0;
  double correct = 0, with_code = 0, clean = 0, reward = 0, turns = 0;
  for (std::size_t g = 0; g < out.groups.size(); ++g) {
    for (std::size_t i = 0; i < out.groups[g].members.size(); ++i) {
      const Trajectory& traj = out.groups[g].members[i];
      const TrajectoryAnalysis& a = out.analyses[g].members[i];
      ++n;
      correct += traj.correct ? 1 : 0;
      with_code += traj.has_code() ? 1 : 0;
      clean += traj.format_clean() ? 1 : 0;
      turns += static_cast<double>(traj.turns.size());
      if (cfg.algo == Algo::gtpo) {
        for (double t : a.shaped_totals) reward += t;
      } else {
        reward += a.sequence_reward;
      }
    }
  }
  if (n > 0) {
    const double inv = 1.0 / static_cast<double>(n);
    out.metrics.train_accuracy = correct * inv;
    out.metrics.code_ratio = with_code * inv;
    out.metrics.format_correctness = clean * inv;
    out.metrics.mean_reward = reward * inv;
    out.metrics.mean_turns = turns * inv;
  }
  return out;
}

StepOutput train_step(PolicyParams& params, std::span<const Task> tasks,
                      const TrainConfig& cfg, AdamState& adam, std::mt19937_64& rng,
                      int step_index, EmbeddingClient* embedder) {
  std::vector<Group> groups;
  const std::int64_t base_id =
      static_cast<std::int64_t>(step_index) * static_cast<std::int64_t>(tasks.size());
  for (std::size_t p = 0; p < tasks.size(); ++p) {
    groups.push_back(collect_group(params, tasks[p], cfg, rng,
                                   base_id + static_cast<std::int64_t>(p),
                                   base_id + static_cast<std::int64_t>(p)));
  }
  return update_from_groups(params, std::move(groups), cfg, adam, step_index, embedder);
}

double evaluate(const PolicyParams& params, int n_tasks, std::uint64_t seed,
                const RolloutLimits& limits) {
  if (n_tasks <= 0)
    throw std::invalid_argument("evaluate: n_tasks must be positive");
  std::mt19937_64 rng(splitmix64(seed));
  int correct = 0;
  for (int i = 0; i < n_tasks; ++i) {
    const Task task = gen_task(rng);
    std::mt19937_64 rollout_rng(splitmix64(rng()));
    const Trajectory traj = rollout(params, task, limits, rollout_rng, 0.0);
    if (traj.correct) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n_tasks);
}

TrainResult train(const TrainConfig& cfg, const TrainSinks& sinks,
                  EmbeddingClient* embedder) {
  if (cfg.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0)
    throw std::invalid_argument("train: gamma must be in [0,1]");
  if (cfg.group_size < 2) throw std::invalid_argument("train: group_size must be >= 2");

  TrainResult result;
  result.params = cfg.warm_start
                      ? pretrain_format_policy(cfg.policy, cfg.seed,
                                               cfg.warm_start_examples)
                      : PolicyParams::zeros(cfg.policy);
  AdamState adam = AdamState::zeros(result.params.theta.size());
  std::mt19937_64 rng(splitmix64(cfg.seed));

  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<Task> tasks;
    tasks.reserve(static_cast<std::size_t>(cfg.prompts_per_step));
    for (int p = 0; p < cfg.prompts_per_step; ++p) tasks.push_back(gen_task(rng));

    StepOutput out = train_step(result.params, tasks, cfg, adam, rng, step, embedder);
    result.feedback_gradient_reads += out.feedback_gradient_reads;
    result.metrics.push_back(out.metrics);
    if (sinks.on_metrics) sinks.on_metrics(out.metrics);
    if (sinks.on_step) sinks.on_step(out);
    if (sinks.on_checkpoint && cfg.checkpoint_every > 0 &&
        (step + 1) % cfg.checkpoint_every == 0) {
      sinks.on_checkpoint(result.params, static_cast<std::uint64_t>(step + 1));
    }
  }
  return result;
}

}  // namespace gtpo
