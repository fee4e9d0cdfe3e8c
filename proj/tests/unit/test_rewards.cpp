#include <doctest.h>

#include <random>

#include "common/oracles.hpp"
#include "gtpo/rewards.hpp"

using namespace gtpo;

namespace {

Trajectory make_traj(std::vector<Turn> turns, bool correct) {
  Trajectory t;
  t.prompt = {vocab::kBos};
  t.turns = std::move(turns);
  t.turns.back().is_final = true;
  t.correct = correct;
  return t;
}

Turn code_turn(const std::string& code, bool valid = true) {
  Turn t;
  t.code = vocab::encode(code);
  t.feedback = std::vector<TokenId>{vocab::kErr};
  t.format_valid = valid;
  return t;
}

Turn final_turn(bool valid = true) {
  Turn t;
  t.reasoning = vocab::encode("@1$");
  t.format_valid = valid;
  return t;
}

// Rule-table reapplication of the turn-reward definition, kept independent
// of the library's implementation.
std::vector<double> turn_reward_oracle(const Trajectory& traj) {
  std::vector<double> out;
  for (std::size_t j = 0; j < traj.turns.size(); ++j) {
    double acc = 0.0, fmt = 0.0;
    if (j + 1 == traj.turns.size() && traj.correct) acc = 1.0;
    if (!traj.turns[j].format_valid) fmt = -0.1;
    out.push_back(acc + fmt);
  }
  return out;
}

}  // namespace

TEST_CASE("sequence reward follows the min rule") {
  CHECK(sequence_reward(make_traj({code_turn("1+1"), final_turn()}, true)) == 1.0);
  CHECK(sequence_reward(make_traj({code_turn("1+1", false), final_turn()}, true)) == 0.0);
  CHECK(sequence_reward(make_traj({code_turn("1+1"), final_turn()}, false)) == 0.0);
}

TEST_CASE("turn rewards: accuracy on the final turn, -0.1 per format error") {
  auto totals = [](const Trajectory& t) {
    std::vector<double> out;
    for (const TurnReward& r : turn_rewards(t)) out.push_back(r.total);
    return out;
  };

  const auto clean_correct = make_traj({code_turn("1+1"), final_turn()}, true);
  CHECK(totals(clean_correct) == std::vector<double>{0.0, 1.0});
  CHECK(totals(clean_correct) == turn_reward_oracle(clean_correct));

  // wrong answer, first turn lacks a tool call
  Turn bare;
  bare.reasoning = vocab::encode("12");
  bare.format_valid = false;  // as the validator would set for turn 1
  const auto wrong = make_traj({bare, final_turn()}, false);
  CHECK(totals(wrong) == std::vector<double>{-0.1, 0.0});

  // correct but a format error on turn 2 of 3
  const auto mixed =
      make_traj({code_turn("1+1"), code_turn("1++", false), final_turn()}, true);
  CHECK(totals(mixed) == std::vector<double>{0.0, -0.1, 1.0});
  CHECK(totals(mixed) == turn_reward_oracle(mixed));

  for (const TurnReward& r : turn_rewards(mixed)) {
    CHECK(r.total == r.r_acc + r.r_format);
  }
}

TEST_CASE("turn reward totals stay in range") {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<Turn> turns;
    const std::size_t n = 1 + rng() % 4;
    for (std::size_t i = 0; i < n; ++i) {
      Turn t = (rng() % 2 == 0) ? code_turn("1+1", rng() % 2 == 0) : final_turn(rng() % 2 == 0);
      turns.push_back(t);
    }
    const auto traj = make_traj(std::move(turns), rng() % 2 == 0);
    const auto rewards = turn_rewards(traj);
    for (std::size_t j = 0; j < rewards.size(); ++j) {
      if (j + 1 < rewards.size()) {
        CHECK(rewards[j].total >= -0.1);
        CHECK(rewards[j].total <= 0.0);
      } else {
        CHECK(rewards[j].total >= -0.1);
        CHECK(rewards[j].total <= 1.0);
      }
    }
    CHECK(turn_reward_oracle(traj) == [&] {
      std::vector<double> v;
      for (const auto& r : rewards) v.push_back(r.total);
      return v;
    }());
  }
}

TEST_CASE("GRPO/GTPO reward consistency on clean single-turn trajectories") {
  for (bool correct : {true, false}) {
    Turn only;
    only.code = vocab::encode("1+1");
    const auto traj = make_traj({only}, correct);
    const auto rewards = turn_rewards(traj);
    REQUIRE(rewards.size() == 1);
    CHECK(rewards[0].total == sequence_reward(traj));
  }
}

TEST_CASE("concat_code joins code in turn order") {
  const auto traj = make_traj({code_turn("12"), code_turn("34"), final_turn()}, false);
  CHECK(vocab::decode(concat_code(traj)) == "1234");

  Turn t1, t3;
  t1.code = vocab::encode("1+1");
  t3.code = vocab::encode("2*2");
  Turn t2;  // reasoning only
  t2.reasoning = vocab::encode("9");
  const auto gaps = make_traj({t1, t2, t3, final_turn()}, false);
  CHECK(vocab::decode(concat_code(gaps)) == "1+12*2");

  CHECK(concat_code(make_traj({final_turn()}, false)).empty());
}

TEST_CASE("ratcliff similarity matches the fixed examples") {
  auto sim = [](const std::string& a, const std::string& b) {
    return ratcliff_similarity(vocab::encode(a), vocab::encode(b));
  };
  CHECK(sim("123", "123") == 1.0);
  CHECK(sim("123", "456") == 0.0);
  // frozen from the brute-force oracle: M = 3 on "abcd" vs "bcde" analogues
  CHECK(oracles::brute_ratcliff(vocab::encode("1234"), vocab::encode("2345")) == 0.75);
  CHECK(sim("1234", "2345") == 0.75);
  CHECK(ratcliff_similarity({}, {}) == 0.0);
  CHECK(sim("", "123") == 0.0);
}

TEST_CASE("ratcliff similarity equals the brute-force oracle on random pairs") {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 3000; ++iter) {
    std::vector<TokenId> a, b;
    const std::size_t la = rng() % 32, lb = rng() % 32;
    const int alphabet = 2 + static_cast<int>(rng() % 8);
    for (std::size_t i = 0; i < la; ++i) a.push_back(static_cast<TokenId>(rng() % alphabet));
    for (std::size_t i = 0; i < lb; ++i) b.push_back(static_cast<TokenId>(rng() % alphabet));
    const double lib = ratcliff_similarity(a, b);
    const double oracle = oracles::brute_ratcliff(a, b);
    REQUIRE(lib == oracle);
    REQUIRE(lib == ratcliff_similarity(b, a));  // symmetric
    if (!a.empty() && a == b) REQUIRE(lib == 1.0);
  }
}

TEST_CASE("shape_group_rewards follows the positive-set rules") {
  ShapingConfig cfg;  // alpha 0.5, ratcliff, code_only

  SUBCASE("no positives: every negative gets zero") {
    Group g;
    g.members.push_back(make_traj({code_turn("1+1"), final_turn()}, false));
    g.members.push_back(make_traj({code_turn("2+2"), final_turn()}, false));
    const auto shaped = shape_group_rewards(g, cfg);
    CHECK(shaped == std::vector<double>{0.0, 0.0});
  }

  SUBCASE("identical code to the single positive earns alpha") {
    Group g;
    g.members.push_back(make_traj({code_turn("12+07"), final_turn()}, true));
    g.members.push_back(make_traj({code_turn("12+07"), final_turn()}, false));
    const auto shaped = shape_group_rewards(g, cfg);
    CHECK(shaped[0] == 1.0);
    CHECK(shaped[1] == 0.5);
  }

  SUBCASE("ratcliff 0.75 on the 4-token pair gives alpha * 0.75") {
    Group g;
    g.members.push_back(make_traj({code_turn("1234"), final_turn()}, true));
    g.members.push_back(make_traj({code_turn("2345"), final_turn()}, false));
    const auto shaped = shape_group_rewards(g, cfg);
    CHECK(shaped[0] == 1.0);
    CHECK(shaped[1] == doctest::Approx(0.375).epsilon(1e-12));
  }

  SUBCASE("scorer none disables shaping") {
    Group g;
    g.members.push_back(make_traj({code_turn("12"), final_turn()}, true));
    g.members.push_back(make_traj({code_turn("12"), final_turn()}, false));
    cfg.scorer = Scorer::none;
    CHECK(shape_group_rewards(g, cfg) == std::vector<double>{1.0, 0.0});
  }
}

TEST_CASE("shaping bounds and order preservation on random groups") {
  std::mt19937_64 rng(23);
  ShapingConfig cfg;
  for (int iter = 0; iter < 300; ++iter) {
    Group g;
    const std::size_t n = 2 + rng() % 6;
    bool any_positive = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::string code;
      for (std::size_t c = 0; c < 1 + rng() % 5; ++c)
        code.push_back(static_cast<char>('0' + rng() % 10));
      const bool correct = rng() % 3 == 0;
      any_positive |= correct;
      g.members.push_back(make_traj({code_turn(code), final_turn()}, correct));
    }
    const auto shaped = shape_group_rewards(g, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      if (g.members[i].correct) {
        CHECK(shaped[i] == 1.0);
      } else if (any_positive) {
        CHECK(shaped[i] >= 0.0);
        CHECK(shaped[i] <= cfg.alpha);
      } else {
        CHECK(shaped[i] == 0.0);
      }
    }
  }
}

TEST_CASE("full-trajectory scope uses policy tokens only") {
  Turn t;
  t.reasoning = vocab::encode("9");
  t.code = vocab::encode("1+1");
  t.feedback = vocab::encode("=+0002");
  Turn f;
  f.reasoning = vocab::encode("@2$");
  const auto traj = make_traj({t, f}, false);
  const auto content = shaping_content(traj, ContentScope::full_trajectory);
  // reasoning + delimited code + final reasoning, no feedback tokens
  CHECK(vocab::decode(content) == "9[1+1]@2$");
  CHECK(vocab::decode(shaping_content(traj, ContentScope::code_only)) == "1+1");
}
