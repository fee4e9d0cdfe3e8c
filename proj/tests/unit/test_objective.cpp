#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "gtpo/objective.hpp"

using namespace gtpo;

TEST_CASE("importance ratios") {
  SUBCASE("identical logprobs give ratios of exactly one") {
    const std::vector<double> lp{-0.5, -1.25, -3.0};
    for (double r : importance_ratios(lp, lp)) CHECK(r == 1.0);
  }
  SUBCASE("a log-2 bump doubles the ratio") {
    const std::vector<double> old_lp{-1.0, -1.0};
    const std::vector<double> new_lp{-1.0, -1.0 + std::log(2.0)};
    const auto r = importance_ratios(new_lp, old_lp);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("random vectors match elementwise recomputation") {
    std::mt19937_64 rng(67);
    std::uniform_real_distribution<double> lp(-8.0, 0.0);
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<double> o, n;
      for (int i = 0; i < 16; ++i) {
        o.push_back(lp(rng));
        n.push_back(lp(rng));
      }
      const auto r = importance_ratios(n, o);
      for (int i = 0; i < 16; ++i) {
        REQUIRE(r[i] == doctest::Approx(std::exp(n[i] - o[i])).epsilon(1e-15));
      }
    }
  }
  SUBCASE("length mismatch is an error") {
    CHECK_THROWS_AS(
        importance_ratios(std::vector<double>{-1.0}, std::vector<double>{-1.0, -2.0}),
        std::invalid_argument);
  }
}

TEST_CASE("clipped surrogate: hand-evaluated branches") {
  const ClipConfig clip{0.2, 0.28};
  SUBCASE("ratio 1 leaves the clip inactive") {
    const auto r = clipped_surrogate(std::vector<double>{1.0}, std::vector<double>{2.0},
                                     clip, 1);
    CHECK(r.objective_value == 2.0);
    CHECK(r.clipped_fraction == 0.0);
  }
  SUBCASE("positive advantage clips from above") {
    const auto r = clipped_surrogate(std::vector<double>{1.5}, std::vector<double>{1.0},
                                     clip, 1);
    CHECK(r.objective_value == doctest::Approx(1.28).epsilon(1e-15));
    CHECK(r.clipped_fraction == 1.0);
  }
  SUBCASE("negative advantage clips from below") {
    const auto r = clipped_surrogate(std::vector<double>{0.5}, std::vector<double>{-1.0},
                                     clip, 1);
    CHECK(r.objective_value == doctest::Approx(-0.8).epsilon(1e-15));
    CHECK(r.clipped_fraction == 1.0);
  }
  SUBCASE("objective equals the contribution mean") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> ratio(0.1, 2.0);
    std::uniform_real_distribution<double> adv(-2.0, 2.0);
    for (int iter = 0; iter < 200; ++iter) {
      std::vector<double> w, a;
      const std::size_t n = 1 + rng() % 20;
      for (std::size_t i = 0; i < n; ++i) {
        w.push_back(ratio(rng));
        a.push_back(adv(rng));
      }
      const auto r = clipped_surrogate(w, a, clip, n);
      double sum = 0.0;
      for (double c : r.per_token_contribution) sum += c;
      REQUIRE(r.objective_value ==
              doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
    }
  }
}

namespace {

// Small synthetic trajectory whose old_logprobs come from the given params,
// so ratios are exactly 1 at those params.
Trajectory synth_trajectory(const PolicyParams& params, std::mt19937_64& rng,
                            std::size_t turns, std::size_t tokens_per_turn) {
  Trajectory traj;
  traj.prompt = {static_cast<TokenId>(rng() % params.spec.vocab)};
  std::vector<TokenId> context = traj.prompt;
  std::vector<double> lps;
  for (std::size_t t = 0; t < turns; ++t) {
    Turn turn;
    for (std::size_t i = 0; i < tokens_per_turn; ++i) {
      const TokenId tok = static_cast<TokenId>(rng() % params.spec.vocab);
      lps.push_back(logprob(params, context, tok));
      turn.reasoning.push_back(tok);
      context.push_back(tok);
    }
    if (t + 1 < turns) {
      turn.feedback = std::vector<TokenId>{static_cast<TokenId>(rng() % params.spec.vocab)};
      context.push_back(turn.feedback->front());
    }
    traj.turns.push_back(std::move(turn));
  }
  traj.turns.back().is_final = true;
  traj.old_logprobs = std::move(lps);
  return traj;
}

FeatureSpec tiny_spec() {
  FeatureSpec spec;
  spec.context = 2;
  spec.features = 10;
  spec.vocab = 5;
  return spec;
}

}  // namespace

TEST_CASE("objective gradient") {
  const ClipConfig clip{0.2, 0.28};
  std::mt19937_64 rng(73);

  SUBCASE("zero advantages give a zero gradient") {
    const PolicyParams p = PolicyParams::zeros(tiny_spec());
    auto rng2 = rng;
    const Trajectory traj = synth_trajectory(p, rng2, 2, 3);
    const std::vector<std::vector<double>> advs{std::vector<double>(6, 0.0)};
    const auto report = objective_gradient(p, std::span<const Trajectory>(&traj, 1),
                                           advs, clip);
    for (double g : report.grad) CHECK(g == 0.0);
    CHECK(report.loss.objective_value == 0.0);
    CHECK(report.feedback_gradient_reads == 0);
  }

  SUBCASE("at the sampling parameters the gradient is the vanilla policy gradient") {
    PolicyParams p = PolicyParams::zeros(tiny_spec());
    std::mt19937_64 init(5);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (double& w : p.theta) w = d(init);
    auto rng2 = rng;
    const Trajectory traj = synth_trajectory(p, rng2, 2, 3);
    std::vector<double> advs;
    std::uniform_real_distribution<double> adv(-1.5, 1.5);
    for (int i = 0; i < 6; ++i) advs.push_back(adv(rng2));
    const std::vector<std::vector<double>> advss{advs};
    const auto report =
        objective_gradient(p, std::span<const Trajectory>(&traj, 1), advss, clip);
    CHECK(report.loss.clipped_fraction == 0.0);

    // A_t * dlogprob_t / dtheta / token_count, accumulated by hand
    std::vector<double> expect(p.theta.size(), 0.0);
    std::vector<TokenId> context = traj.prompt;
    std::size_t t = 0;
    for (const Turn& turn : traj.turns) {
      for (TokenId tok : turn.policy_tokens()) {
        for (const auto& [idx, g] : logprob_grad(p, context, tok)) {
          expect[idx] += advs[t] * g / 6.0;
        }
        context.push_back(tok);
        ++t;
      }
      if (turn.feedback)
        context.insert(context.end(), turn.feedback->begin(), turn.feedback->end());
    }
    for (std::size_t i = 0; i < expect.size(); ++i) {
      REQUIRE(report.grad[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
  }

  SUBCASE("matches central finite differences away from kinks") {
    for (int iter = 0; iter < 10; ++iter) {
      PolicyParams sampling = PolicyParams::zeros(tiny_spec());
      std::uniform_real_distribution<double> d(-0.4, 0.4);
      for (double& w : sampling.theta) w = d(rng);
      auto rng2 = rng;
      std::vector<Trajectory> batch;
      batch.push_back(synth_trajectory(sampling, rng2, 2, 3));
      batch.push_back(synth_trajectory(sampling, rng2, 1, 4));
      std::vector<std::vector<double>> advs;
      std::uniform_real_distribution<double> adv(-1.0, 1.0);
      for (const Trajectory& tr : batch) {
        std::vector<double> a;
        for (std::size_t i = 0; i < tr.policy_token_count(); ++i) a.push_back(adv(rng2));
        advs.push_back(a);
      }
      // evaluate the objective at slightly perturbed parameters
      PolicyParams p = sampling;
      for (double& w : p.theta) w += d(rng) * 0.1;

      const auto report = objective_gradient(p, batch, advs, clip);
      const double h = 1e-5;
      std::uniform_int_distribution<std::size_t> pick(0, p.theta.size() - 1);
      for (int probe = 0; probe < 25; ++probe) {
        const std::size_t idx = pick(rng);
        PolicyParams up = p, down = p;
        up.theta[idx] += h;
        down.theta[idx] -= h;
        const double fd = (objective_value(up, batch, advs, clip).objective_value -
                           objective_value(down, batch, advs, clip).objective_value) /
                          (2 * h);
        const double g = report.grad[idx];
        if (std::abs(fd) > 1e-7) {
          REQUIRE(g == doctest::Approx(fd).epsilon(1e-4));
        } else {
          REQUIRE(std::abs(g - fd) < 1e-6);
        }
      }
    }
  }

  SUBCASE("scaling advantages scales the objective linearly") {
    PolicyParams p = PolicyParams::zeros(tiny_spec());
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (double& w : p.theta) w = d(rng);
    auto rng2 = rng;
    const Trajectory traj = synth_trajectory(p, rng2, 2, 3);
    std::vector<double> advs{0.3, -0.7, 1.1, 0.2, -0.4, 0.9};
    const std::vector<std::vector<double>> a1{advs};
    for (double& a : advs) a *= 3.0;
    const std::vector<std::vector<double>> a3{advs};
    const auto r1 = objective_value(p, std::span<const Trajectory>(&traj, 1), a1, clip);
    const auto r3 = objective_value(p, std::span<const Trajectory>(&traj, 1), a3, clip);
    CHECK(r3.objective_value == doctest::Approx(3.0 * r1.objective_value).epsilon(1e-12));
  }

  SUBCASE("misaligned advantages are rejected") {
    const PolicyParams p = PolicyParams::zeros(tiny_spec());
    auto rng2 = rng;
    const Trajectory traj = synth_trajectory(p, rng2, 1, 3);
    const std::vector<std::vector<double>> advs{std::vector<double>(2, 1.0)};
    CHECK_THROWS_AS(
        objective_gradient(p, std::span<const Trajectory>(&traj, 1), advs, clip),
        std::invalid_argument);
  }
}
