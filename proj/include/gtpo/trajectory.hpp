#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gtpo/vocab.hpp"

namespace gtpo {

/// One policy-generated segment: optional reasoning filler, an optional tool
/// call, and the tool's feedback. Code delimiters are implicit: a well-formed
/// code turn reconstructs as reasoning + [code-open] + code + [code-close].
/// Malformed spans keep their raw tokens (including stray delimiters) in
/// `reasoning` with format_valid=false, so no sampled token is ever lost.
struct Turn {
  std::vector<TokenId> reasoning;
  std::optional<std::vector<TokenId>> code;
  std::optional<std::vector<TokenId>> feedback;
  bool is_final = false;
  bool format_valid = true;

  std::size_t policy_token_count() const;
  /// Policy tokens in sampling order (reasoning, then delimited code).
  std::vector<TokenId> policy_tokens() const;
};

struct Trajectory {
  std::vector<TokenId> prompt;
  std::vector<Turn> turns;
  std::optional<long long> answer;
  bool correct = false;
  /// One value per policy token, in sampling order; absent only for records
  /// read from logs that omitted them.
  std::optional<std::vector<double>> old_logprobs;

  std::size_t policy_token_count() const;
  /// All turn tokens (policy and feedback) in stream order.
  std::vector<TokenId> flat_tokens() const;
  /// Flag per flat_tokens() entry: true for policy tokens, false for feedback.
  std::vector<bool> policy_mask() const;
  bool has_code() const;
  bool format_clean() const;
};

/// G rollouts for one prompt; the normalization unit for advantages and
/// reward shaping. Size >= 2 is enforced by the operations that need it,
/// not at construction, so undersized logged groups can still be inspected.
struct Group {
  std::int64_t prompt_id = 0;
  std::int64_t group_id = 0;
  std::vector<Trajectory> members;
};

/// Token as it left the sampler: environment feedback tokens carry no logprob.
struct MarkedToken {
  TokenId id = 0;
  bool from_env = false;
  double logprob = 0.0;
};

/// Split a marked token stream into turns. Turn boundaries are a consumed
/// code-close (the tool fired) and the edges of feedback spans; the last turn
/// is final. Total on any input: malformed streams produce format-invalid
/// turns, never an error.
Trajectory segment(std::vector<TokenId> prompt, std::span<const MarkedToken> stream);

/// False iff the turn holds a malformed tool call (stray delimiters in the
/// span or code that the tool grammar rejects), or it is the first turn and
/// contains no tool call at all.
bool validate_turn_format(const Turn& turn, std::size_t turn_index_1based);

/// Decode the answer span of a final turn: tokens after the last answer
/// marker, skipping separators, with an optional sign and at least one digit.
std::optional<long long> decode_answer(const Turn& final_turn);

}  // namespace gtpo
