#pragma once

#include <span>
#include <vector>

#include "gtpo/trajectory.hpp"

namespace gtpo {

inline constexpr double kDefaultStdFloor = 1e-8;

/// Discounted reward-to-go per turn: values[j] = reward[j] + gamma*values[j+1].
struct ReturnVector {
  std::vector<double> values;
  double gamma = 1.0;
};

ReturnVector discounted_returns(std::span<const double> rewards, double gamma);

/// Per-member, per-turn advantages. At every turn index with at least two
/// participating members and std above the floor, the values are normalized
/// to mean 0 / population variance 1 over the participants; otherwise they
/// are exactly 0.
struct AdvantageSet {
  std::vector<std::vector<double>> per_turn;  // [member][turn], ragged
  double std_floor = kDefaultStdFloor;
};

AdvantageSet gtpo_group_advantages(const std::vector<ReturnVector>& returns,
                                   double std_floor = kDefaultStdFloor);

/// Sequence-level normalization over the group (population std), all-zero
/// when the spread is below the floor.
std::vector<double> grpo_group_advantages(std::span<const double> rewards,
                                          double std_floor = kDefaultStdFloor);

/// Spread turn advantages over each member's policy tokens. Feedback tokens
/// receive nothing; output[i] aligns with member i's old_logprobs.
std::vector<std::vector<double>> broadcast_to_tokens(
    const AdvantageSet& adv, std::span<const Trajectory> members);

/// GRPO variant: one advantage per member, constant across its policy tokens.
std::vector<std::vector<double>> broadcast_to_tokens(
    std::span<const double> member_advantages, std::span<const Trajectory> members);

}  // namespace gtpo
