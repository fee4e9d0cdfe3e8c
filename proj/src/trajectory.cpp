#include "gtpo/trajectory.hpp"

#include <algorithm>

#include "gtpo/calc.hpp"

namespace gtpo {

std::size_t Turn::policy_token_count() const {
  return reasoning.size() + (code ? code->size() + 2 : 0);
}

std::vector<TokenId> Turn::policy_tokens() const {
  std::vector<TokenId> out = reasoning;
  if (code) {
    out.push_back(vocab::kCodeOpen);
    out.insert(out.end(), code->begin(), code->end());
    out.push_back(vocab::kCodeClose);
  }
  return out;
}

std::size_t Trajectory::policy_token_count() const {
  std::size_t n = 0;
  for (const Turn& t : turns) n += t.policy_token_count();
  return n;
}

std::vector<TokenId> Trajectory::flat_tokens() const {
  std::vector<TokenId> out;
  for (const Turn& t : turns) {
    auto pol = t.policy_tokens();
    out.insert(out.end(), pol.begin(), pol.end());
    if (t.feedback) out.insert(out.end(), t.feedback->begin(), t.feedback->end());
  }
  return out;
}

std::vector<bool> Trajectory::policy_mask() const {
  std::vector<bool> mask;
  for (const Turn& t : turns) {
    mask.insert(mask.end(), t.policy_token_count(), true);
    if (t.feedback) mask.insert(mask.end(), t.feedback->size(), false);
  }
  return mask;
}

bool Trajectory::has_code() const {
  return std::any_of(turns.begin(), turns.end(),
                     [](const Turn& t) { return t.code.has_value(); });
}

bool Trajectory::format_clean() const {
  return std::all_of(turns.begin(), turns.end(),
                     [](const Turn& t) { return t.format_valid; });
}

namespace {

// Classify one policy span into reasoning/code; validity is decided later by
// validate_turn_format. Raw tokens stay in reasoning when the delimiters do
// not pair up, so no sampled token is lost.
Turn parse_policy_span(std::vector<TokenId> span, bool closed_by_code_close) {
  Turn turn;
  auto open_it = std::find(span.begin(), span.end(), vocab::kCodeOpen);
  if (closed_by_code_close && open_it != span.end()) {
    // span ends with the consumed code-close token
    turn.reasoning.assign(span.begin(), open_it);
    turn.code.emplace(open_it + 1, span.end() - 1);
  } else {
    turn.reasoning = std::move(span);
  }
  return turn;
}

}  // namespace

Trajectory segment(std::vector<TokenId> prompt, std::span<const MarkedToken> stream) {
  Trajectory traj;
  traj.prompt = std::move(prompt);
  std::vector<double> logprobs;

  std::size_t i = 0;
  while (i < stream.size()) {
    std::vector<TokenId> span;
    bool closed = false;
    while (i < stream.size() && !stream[i].from_env) {
      span.push_back(stream[i].id);
      logprobs.push_back(stream[i].logprob);
      const bool was_close = stream[i].id == vocab::kCodeClose;
      ++i;
      if (was_close) {
        closed = true;
        break;
      }
    }
    Turn turn = parse_policy_span(std::move(span), closed);
    while (i < stream.size() && stream[i].from_env) {
      if (!turn.feedback) turn.feedback.emplace();
      turn.feedback->push_back(stream[i].id);
      ++i;
    }
    traj.turns.push_back(std::move(turn));
  }
  if (traj.turns.empty()) traj.turns.emplace_back();
  traj.turns.back().is_final = true;

  for (std::size_t t = 0; t < traj.turns.size(); ++t) {
    traj.turns[t].format_valid = validate_turn_format(traj.turns[t], t + 1);
  }
  traj.answer = decode_answer(traj.turns.back());
  traj.old_logprobs = std::move(logprobs);
  return traj;
}

bool validate_turn_format(const Turn& turn, std::size_t turn_index_1based) {
  for (TokenId t : turn.reasoning) {
    if (t == vocab::kCodeOpen || t == vocab::kCodeClose) return false;
  }
  if (turn.code) {
    for (TokenId t : *turn.code) {
      if (t == vocab::kCodeOpen || t == vocab::kCodeClose) return false;
    }
    if (!calc::parses(*turn.code)) return false;
  } else if (turn_index_1based == 1) {
    return false;  // the first turn must contain a tool call
  }
  return true;
}

std::optional<long long> decode_answer(const Turn& final_turn) {
  const std::vector<TokenId>& toks = final_turn.reasoning;
  auto last_ans = std::find(toks.rbegin(), toks.rend(), vocab::kAnswer);
  if (last_ans == toks.rend()) return std::nullopt;
  std::size_t i = toks.size() - static_cast<std::size_t>(last_ans - toks.rbegin());

  while (i < toks.size() && toks[i] == vocab::kSep) ++i;
  long long sign = 1;
  if (i < toks.size() && (toks[i] == vocab::kMinus || toks[i] == vocab::kPlus)) {
    if (toks[i] == vocab::kMinus) sign = -1;
    ++i;
  }
  long long value = 0;
  std::size_t digits = 0;
  while (i < toks.size() && vocab::is_digit(toks[i])) {
    if (++digits > 9) return std::nullopt;
    value = value * 10 + vocab::digit_value(toks[i]);
    ++i;
  }
  if (digits == 0) return std::nullopt;
  return sign * value;
}

}  // namespace gtpo
