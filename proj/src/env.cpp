#include "gtpo/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gtpo/calc.hpp"

namespace gtpo {
namespace {

void push_two_digits(std::vector<TokenId>& out, int value) {
  out.push_back(vocab::digit(value / 10));
  out.push_back(vocab::digit(value % 10));
}

}  // namespace

Task gen_task(std::mt19937_64& rng) {
  Task task;
  task.lhs = static_cast<int>(rng() % 100);
  task.rhs = static_cast<int>(rng() % 100);
  switch (rng() % 3) {
    case 0: task.op = vocab::kPlus; task.ground_truth = task.lhs + task.rhs; break;
    case 1: task.op = vocab::kMinus; task.ground_truth = task.lhs - task.rhs; break;
    default: task.op = vocab::kTimes;
             task.ground_truth = static_cast<long long>(task.lhs) * task.rhs;
  }
  task.prompt.reserve(kPromptLength);
  task.prompt.push_back(vocab::kBos);
  push_two_digits(task.prompt, task.lhs);
  task.prompt.push_back(task.op);
  push_two_digits(task.prompt, task.rhs);
  task.prompt.push_back(vocab::kSep);
  return task;
}

std::vector<TokenId> execute_code(std::span<const TokenId> code) {
  const auto value = calc::evaluate(code);
  if (!value) return {vocab::kErr};
  std::vector<TokenId> out;
  out.reserve(kFeedbackLength);
  out.push_back(vocab::kEquals);
  out.push_back(*value < 0 ? vocab::kMinus : vocab::kPlus);
  const long long magnitude = std::llabs(*value);
  out.push_back(vocab::digit(static_cast<int>(magnitude / 1000 % 10)));
  out.push_back(vocab::digit(static_cast<int>(magnitude / 100 % 10)));
  out.push_back(vocab::digit(static_cast<int>(magnitude / 10 % 10)));
  out.push_back(vocab::digit(static_cast<int>(magnitude % 10)));
  return out;
}

bool verify(std::optional<long long> answer, const Task& task) {
  return answer.has_value() && *answer == task.ground_truth;
}

Trajectory rollout(const PolicyParams& params, const Task& task,
                   const RolloutLimits& limits, std::mt19937_64& rng,
                   double temperature) {
  if (limits.max_turns < 1 || limits.max_tokens_per_turn < 4)
    throw std::invalid_argument("rollout: invalid limits");

  std::vector<TokenId> context = task.prompt;
  std::vector<MarkedToken> stream;
  bool ended = false;

  for (std::size_t turn = 0; turn < limits.max_turns && !ended; ++turn) {
    std::size_t turn_open = stream.size();  // first policy token of this turn
    std::size_t tokens_this_turn = 0;
    while (true) {
      if (tokens_this_turn == limits.max_tokens_per_turn) {
        ended = true;  // per-turn budget cut ends the whole trajectory
        break;
      }
      const SampledToken sampled = temperature > 0.0
                                       ? sample_token(params, context, rng, temperature)
                                       : argmax_token(params, context);
      stream.push_back({sampled.token, false, sampled.logprob});
      context.push_back(sampled.token);
      ++tokens_this_turn;
      if (sampled.token == vocab::kEos) {
        ended = true;
        break;
      }
      if (sampled.token == vocab::kCodeClose) {
        // Extract the code span of this turn and fire the tool.
        std::vector<TokenId> code;
        bool open_seen = false;
        for (std::size_t i = turn_open; i + 1 < stream.size(); ++i) {
          if (!open_seen) {
            open_seen = stream[i].id == vocab::kCodeOpen;
          } else {
            code.push_back(stream[i].id);
          }
        }
        const std::vector<TokenId> feedback =
            open_seen ? execute_code(code) : std::vector<TokenId>{vocab::kErr};
        for (TokenId t : feedback) {
          stream.push_back({t, true, 0.0});
          context.push_back(t);
        }
        break;  // next turn
      }
    }
  }

  Trajectory traj = segment(task.prompt, stream);
  traj.correct = verify(traj.answer, task);
  return traj;
}

namespace {

// Bucket of the (offset, token) indicator, probed through the public API.
std::uint32_t offset_bucket(const FeatureSpec& spec, std::uint32_t offset, TokenId tok) {
  std::vector<TokenId> ctx(offset, 0);
  ctx[0] = tok;
  return context_features(ctx, spec)[offset - 1];
}

// True when every possible feature maps to its own bucket, so no context can
// ever add weight to another feature's rows.
bool feature_space_injective(const FeatureSpec& spec) {
  std::vector<std::uint32_t> buckets;
  for (std::uint32_t o = 1; o <= spec.context; ++o) {
    for (TokenId t = 0; t < spec.vocab; ++t) buckets.push_back(offset_bucket(spec, o, t));
    std::vector<TokenId> short_ctx(o - 1, 0);
    buckets.push_back(context_features(short_ctx, spec).back());  // bos marker at o
  }
  std::sort(buckets.begin(), buckets.end());
  return std::adjacent_find(buckets.begin(), buckets.end()) == buckets.end();
}

}  // namespace

PolicyParams oracle_policy() {
  // Relay rules keyed on the token exactly seven positions back. Prompt and
  // feedback spans are fixed-width, so one offset drives the whole episode:
  //   ^ -> [        start the code block
  //   d -> d        copy prompt digits and, later, feedback digits
  //   op -> op      copy the operator and the result sign
  //   | -> ]        close the code block (tool fires)
  //   ] -> @        open the answer span
  //   = -> |        filler keeping the relay aligned
  //   @ -> $        stop after the copied digits
  FeatureSpec spec;
  spec.context = 8;
  spec.features = 1 << 14;
  while (!feature_space_injective(spec)) ++spec.features;

  PolicyParams params = PolicyParams::zeros(spec);
  const double weight = 12.0;
  auto rule = [&](TokenId seen, TokenId emit) {
    const std::uint32_t f = offset_bucket(spec, 7, seen);
    params.theta[static_cast<std::size_t>(f) * spec.vocab + emit] = weight;
  };

  rule(vocab::kBos, vocab::kCodeOpen);
  for (TokenId d = 0; d < 10; ++d) rule(d, d);
  rule(vocab::kPlus, vocab::kPlus);
  rule(vocab::kMinus, vocab::kMinus);
  rule(vocab::kTimes, vocab::kTimes);
  rule(vocab::kSep, vocab::kCodeClose);
  rule(vocab::kCodeClose, vocab::kAnswer);
  rule(vocab::kEquals, vocab::kSep);
  rule(vocab::kAnswer, vocab::kEos);
  return params;
}

namespace {

// Fraction of scripted episodes that skip the tool and guess; keeps initial
// tool adoption below 1 so it remains a learnable behavior.
constexpr int kToollessPercent = 8;

// One scripted episode against a concrete task: well-formed structure, code
// that garbles the prompt expression token by token, tool output echoed into
// the answer. A small share of episodes skips the tool and guesses, so tool
// use remains something to learn. Returns the stream with feedback marked.
std::vector<MarkedToken> scripted_format_demo(const Task& task, std::mt19937_64& rng,
                                              int garble_percent) {
  std::vector<MarkedToken> stream;
  auto policy = [&](TokenId t) { stream.push_back({t, false, 0.0}); };

  if (rng() % 100 < kToollessPercent) {
    // tool-less guess: answer some digits and stop
    policy(vocab::kAnswer);
    const int digits = 1 + static_cast<int>(rng() % 4);
    for (int d = 0; d < digits; ++d)
      policy(vocab::digit(static_cast<int>(rng() % 10)));
    policy(vocab::kEos);
    return stream;
  }

  policy(vocab::kCodeOpen);
  std::vector<TokenId> code(task.prompt.begin() + 1, task.prompt.end() - 1);
  for (TokenId& t : code) {
    if (static_cast<int>(rng() % 100) >= garble_percent) continue;
    if (vocab::is_digit(t)) {
      t = vocab::digit(static_cast<int>(rng() % 10));
    } else {
      const TokenId ops[3] = {vocab::kPlus, vocab::kMinus, vocab::kTimes};
      t = ops[rng() % 3];
    }
  }
  for (TokenId t : code) policy(t);
  policy(vocab::kCodeClose);

  const std::vector<TokenId> feedback = execute_code(code);
  for (TokenId t : feedback) stream.push_back({t, true, 0.0});

  // echo the tool output, separator first so the copy distance stays fixed
  policy(vocab::kAnswer);
  policy(vocab::kSep);
  for (std::size_t i = 1; i < feedback.size(); ++i) policy(feedback[i]);
  policy(vocab::kEos);
  return stream;
}

}  // namespace

PolicyParams pretrain_format_policy(const FeatureSpec& spec, std::uint64_t seed,
                                    int examples) {
  PolicyParams params = PolicyParams::zeros(spec);
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0x61c88647);

  // Plain SGD cross-entropy fit over the scripted episodes.
  const double lr = 0.15;
  const int epochs = 3;
  const int garble_percent = 50;
  std::vector<std::vector<TokenId>> prompts;
  std::vector<std::vector<MarkedToken>> demos;
  for (int i = 0; i < examples; ++i) {
    const Task task = gen_task(rng);
    prompts.push_back(task.prompt);
    demos.push_back(scripted_format_demo(task, rng, garble_percent));
  }
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (int i = 0; i < examples; ++i) {
      std::vector<TokenId> context = prompts[i];
      for (const MarkedToken& mt : demos[i]) {
        if (!mt.from_env) {
          accumulate_logprob_grad(params, context, mt.id, lr, params.theta);
        }
        context.push_back(mt.id);
      }
    }
  }
  return params;
}

}  // namespace gtpo
