#pragma once

#include <span>
#include <vector>

#include "gtpo/trajectory.hpp"

namespace gtpo {

class EmbeddingClient;

/// Per-turn reward: accuracy lands only on the final turn, format violations
/// cost a flat -0.1, and the two add (not min).
struct TurnReward {
  double r_acc = 0.0;
  double r_format = 0.0;
  double total = 0.0;
};

enum class Scorer { ratcliff, embedding, none };
enum class ContentScope { code_only, full_trajectory };

struct ShapingConfig {
  double alpha = 0.5;
  Scorer scorer = Scorer::ratcliff;
  ContentScope content_scope = ContentScope::code_only;
};

/// Terminal GRPO-style reward: min(accuracy, format) over the whole
/// trajectory, in {0, 1}.
double sequence_reward(const Trajectory& traj);

/// Turn-level rewards: r_acc = 1 on the final turn iff correct, r_format =
/// -0.1 on any format-invalid turn.
std::vector<TurnReward> turn_rewards(const Trajectory& traj);

/// Tool-call contents concatenated in turn order; empty when no turn has code.
std::vector<TokenId> concat_code(const Trajectory& traj);

/// Policy-token stream or code-only content, depending on scope.
std::vector<TokenId> shaping_content(const Trajectory& traj, ContentScope scope);

/// Gestalt sequence similarity: 2M / (|a|+|b|) where M sums the lengths of
/// recursively matched longest common blocks. 0 when both sides are empty.
double ratcliff_similarity(std::span<const TokenId> a, std::span<const TokenId> b);

/// Shaped final-turn r_acc per member: positives stay at 1.0, each negative
/// earns (alpha/|P|) * sum of similarity to every positive's content. With no
/// positives or scorer none, negatives get 0.
std::vector<double> shape_group_rewards(const Group& group, const ShapingConfig& cfg,
                                        EmbeddingClient* embedder = nullptr);

}  // namespace gtpo
