#include "gtpo/advantage.hpp"

#include <cmath>
#include <stdexcept>

namespace gtpo {

ReturnVector discounted_returns(std::span<const double> rewards, double gamma) {
  if (rewards.empty())
    throw std::invalid_argument("discounted_returns: empty reward vector");
  if (gamma < 0.0 || gamma > 1.0)
    throw std::invalid_argument("discounted_returns: gamma must be in [0,1]");
  ReturnVector out;
  out.gamma = gamma;
  out.values.resize(rewards.size());
  double acc = 0.0;
  for (std::size_t j = rewards.size(); j-- > 0;) {
    acc = rewards[j] + gamma * acc;
    out.values[j] = acc;
  }
  return out;
}

namespace {

// Mean and population std over `values`; normalizes in place unless the
// participation or floor rule zeroes the column.
void normalize_column(std::vector<double*>& cells, double std_floor) {
  const std::size_t n = cells.size();
  if (n < 2) {
    for (double* c : cells) *c = 0.0;
    return;
  }
  double mean = 0.0;
  for (double* c : cells) mean += *c;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double* c : cells) var += (*c - mean) * (*c - mean);
  var /= static_cast<double>(n);
  const double std = std::sqrt(var);
  if (std < std_floor) {
    for (double* c : cells) *c = 0.0;
    return;
  }
  for (double* c : cells) *c = (*c - mean) / std;
}

}  // namespace

AdvantageSet gtpo_group_advantages(const std::vector<ReturnVector>& returns,
                                   double std_floor) {
  if (returns.size() < 2)
    throw std::invalid_argument("gtpo_group_advantages: group size must be >= 2");
  AdvantageSet out;
  out.std_floor = std_floor;
  out.per_turn.resize(returns.size());
  std::size_t max_turns = 0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    out.per_turn[i] = returns[i].values;
    max_turns = std::max(max_turns, returns[i].values.size());
  }
  std::vector<double*> column;
  for (std::size_t j = 0; j < max_turns; ++j) {
    column.clear();
    for (auto& member : out.per_turn) {
      if (j < member.size()) column.push_back(&member[j]);
    }
    normalize_column(column, std_floor);
  }
  return out;
}

std::vector<double> grpo_group_advantages(std::span<const double> rewards,
                                          double std_floor) {
  if (rewards.size() < 2)
    throw std::invalid_argument("grpo_group_advantages: group size must be >= 2");
  std::vector<double> out(rewards.begin(), rewards.end());
  std::vector<double*> column;
  column.reserve(out.size());
  for (double& v : out) column.push_back(&v);
  normalize_column(column, std_floor);
  return out;
}

std::vector<std::vector<double>> broadcast_to_tokens(
    const AdvantageSet& adv, std::span<const Trajectory> members) {
  if (adv.per_turn.size() != members.size())
    throw std::invalid_argument("broadcast_to_tokens: member count mismatch");
  std::vector<std::vector<double>> out(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Trajectory& traj = members[i];
    if (adv.per_turn[i].size() != traj.turns.size())
      throw std::invalid_argument(
          "broadcast_to_tokens: turn count mismatch for member " + std::to_string(i));
    out[i].reserve(traj.policy_token_count());
    for (std::size_t j = 0; j < traj.turns.size(); ++j) {
      out[i].insert(out[i].end(), traj.turns[j].policy_token_count(),
                    adv.per_turn[i][j]);
    }
  }
  return out;
}

std::vector<std::vector<double>> broadcast_to_tokens(
    std::span<const double> member_advantages, std::span<const Trajectory> members) {
  if (member_advantages.size() != members.size())
    throw std::invalid_argument("broadcast_to_tokens: member count mismatch");
  std::vector<std::vector<double>> out(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    out[i].assign(members[i].policy_token_count(), member_advantages[i]);
  }
  return out;
}

}  // namespace gtpo
