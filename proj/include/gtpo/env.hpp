#pragma once

#include <optional>
#include <random>
#include <span>

#include "gtpo/policy.hpp"
#include "gtpo/trajectory.hpp"

namespace gtpo {

/// One arithmetic prompt "a op b" with operands in [0, 99]. Operands are
/// rendered as two digits each, so the prompt is always
/// [bos d d op d d sep] and tool feedback is always [= sign d d d d]:
/// fixed spans keep the copy strategy expressible inside the policy's
/// context window.
struct Task {
  int lhs = 0;
  TokenId op = vocab::kPlus;
  int rhs = 0;
  long long ground_truth = 0;
  std::vector<TokenId> prompt;
};

struct RolloutLimits {
  std::size_t max_turns = 3;
  std::size_t max_tokens_per_turn = 32;
};

inline constexpr std::size_t kPromptLength = 7;
inline constexpr std::size_t kFeedbackLength = 6;

/// Uniform operands and operator; deterministic under a seeded rng.
Task gen_task(std::mt19937_64& rng);

/// Run the tool on a code span. Success yields [= sign d d d d] with the
/// value zero-padded to four digits; any parse or range failure yields the
/// single error token. Callers never see an exception.
std::vector<TokenId> execute_code(std::span<const TokenId> code);

/// Exact match against the ground truth; absent answers are wrong.
bool verify(std::optional<long long> answer, const Task& task);

/// Sample a full multi-turn trajectory: policy tokens stream until a
/// code-close fires the tool (feedback joins the context), end-of-sequence
/// ends the trajectory, or a budget runs out. temperature <= 0 decodes
/// greedily. The result is segmented, format-validated and verified, and
/// carries a temperature-1 logprob for every policy token.
Trajectory rollout(const PolicyParams& params, const Task& task,
                   const RolloutLimits& limits, std::mt19937_64& rng,
                   double temperature);

/// Hand-built parameters that solve every task by relaying the token seven
/// positions back: prompt copied into code, then tool output copied into the
/// answer. Establishes that tasks are solvable within default budgets.
PolicyParams oracle_policy();

/// Format-competent starting point for RL, the desk-scale stand-in for a
/// cold-start fine-tune: parameters fitted by cross-entropy to a scripted
/// demonstrator that opens a code block, writes a random expression
/// (content carries no task information), and echoes the tool output into
/// the answer span. Deterministic in (spec, seed, examples).
PolicyParams pretrain_format_policy(const FeatureSpec& spec, std::uint64_t seed,
                                    int examples = 2000);

}  // namespace gtpo
