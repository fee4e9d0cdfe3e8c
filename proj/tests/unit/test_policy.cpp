#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>

#include "gtpo/policy.hpp"

using namespace gtpo;

namespace {

FeatureSpec small_spec() {
  FeatureSpec spec;
  spec.context = 3;
  spec.features = 64;
  spec.vocab = 8;
  return spec;
}

PolicyParams random_params(FeatureSpec spec, std::uint64_t seed, double scale = 0.5) {
  PolicyParams p = PolicyParams::zeros(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  for (double& w : p.theta) w = d(rng);
  return p;
}

std::vector<TokenId> random_context(std::mt19937_64& rng, const FeatureSpec& spec,
                                    std::size_t len) {
  std::vector<TokenId> ctx;
  for (std::size_t i = 0; i < len; ++i)
    ctx.push_back(static_cast<TokenId>(rng() % spec.vocab));
  return ctx;
}

}  // namespace

TEST_CASE("context features") {
  const FeatureSpec spec = small_spec();
  SUBCASE("empty context activates the begin-of-sequence feature only") {
    const auto feats = context_features({}, spec);
    CHECK(feats.size() == 1);
  }
  SUBCASE("identical contexts give identical features") {
    const std::vector<TokenId> ctx{1, 2, 3, 4};
    CHECK(context_features(ctx, spec) == context_features(ctx, spec));
  }
  SUBCASE("tokens beyond the window do not matter") {
    const std::vector<TokenId> a{7, 1, 2, 3};
    const std::vector<TokenId> b{5, 1, 2, 3};  // differs at the (k+1)-th-last token
    CHECK(context_features(a, spec) == context_features(b, spec));
  }
  SUBCASE("tokens inside the window do matter") {
    const std::vector<TokenId> a{1, 2, 3};
    const std::vector<TokenId> b{1, 2, 4};
    CHECK(context_features(a, spec) != context_features(b, spec));
  }
}

TEST_CASE("logprob: uniform at zero parameters and shift invariant") {
  const FeatureSpec spec = small_spec();
  const PolicyParams zero = PolicyParams::zeros(spec);
  const std::vector<TokenId> ctx{1, 2};
  for (TokenId t = 0; t < spec.vocab; ++t) {
    CHECK(logprob(zero, ctx, t) ==
          doctest::Approx(-std::log(static_cast<double>(spec.vocab))).epsilon(1e-15));
  }

  // adding a constant to every logit of a context leaves logprobs unchanged
  PolicyParams shifted = random_params(spec, 3);
  const auto base = logprob(shifted, ctx, 5);
  const auto feats = context_features(ctx, spec);
  for (std::uint32_t f : feats) {
    for (std::uint32_t v = 0; v < spec.vocab; ++v) {
      shifted.theta[static_cast<std::size_t>(f) * spec.vocab + v] += 2.5;
    }
  }
  CHECK(logprob(shifted, ctx, 5) == doctest::Approx(base).epsilon(1e-12));

  CHECK_THROWS_AS(logprob(zero, ctx, spec.vocab), std::invalid_argument);
}

TEST_CASE("logprobs normalize per context") {
  const FeatureSpec spec = small_spec();
  std::mt19937_64 rng(43);
  for (int iter = 0; iter < 200; ++iter) {
    const PolicyParams p = random_params(spec, rng(), 2.0);
    const auto ctx = random_context(rng, spec, rng() % 6);
    double total = 0.0;
    for (TokenId t = 0; t < spec.vocab; ++t) total += std::exp(logprob(p, ctx, t));
    REQUIRE(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("logprob gradient: finite differences and the score identity") {
  const FeatureSpec spec = small_spec();
  std::mt19937_64 rng(47);

  SUBCASE("uniform two-token case has magnitude (1 - 1/2) on active rows") {
    FeatureSpec tiny = spec;
    tiny.vocab = 2;
    const PolicyParams zero = PolicyParams::zeros(tiny);
    const std::vector<TokenId> ctx{1};
    const auto grad = logprob_grad(zero, ctx, 0);
    const auto feats = context_features(ctx, tiny);
    REQUIRE(grad.size() == feats.size() * tiny.vocab);
    for (const auto& [idx, g] : grad) {
      CHECK(std::abs(g) == doctest::Approx(0.5).epsilon(1e-15));
    }
  }

  SUBCASE("central finite differences agree") {
    const double h = 1e-6;
    for (int iter = 0; iter < 20; ++iter) {
      PolicyParams p = random_params(spec, rng(), 1.0);
      const auto ctx = random_context(rng, spec, 1 + rng() % 5);
      const TokenId tok = static_cast<TokenId>(rng() % spec.vocab);
      const auto grad = logprob_grad(p, ctx, tok);
      for (const auto& [idx, g] : grad) {
        const double saved = p.theta[idx];
        p.theta[idx] = saved + h;
        const double up = logprob(p, ctx, tok);
        p.theta[idx] = saved - h;
        const double down = logprob(p, ctx, tok);
        p.theta[idx] = saved;
        const double fd = (up - down) / (2 * h);
        if (std::abs(fd) > 1e-9) {
          REQUIRE(g == doctest::Approx(fd).epsilon(1e-6));
        } else {
          REQUIRE(std::abs(g - fd) < 1e-9);
        }
      }
    }
  }

  SUBCASE("prob-weighted gradients sum to zero") {
    for (int iter = 0; iter < 50; ++iter) {
      const PolicyParams p = random_params(spec, rng(), 1.5);
      const auto ctx = random_context(rng, spec, rng() % 5);
      std::vector<double> acc(p.theta.size(), 0.0);
      for (TokenId t = 0; t < spec.vocab; ++t) {
        const double prob = std::exp(logprob(p, ctx, t));
        for (const auto& [idx, g] : logprob_grad(p, ctx, t)) acc[idx] += prob * g;
      }
      for (double v : acc) REQUIRE(std::abs(v) < 1e-10);
    }
  }
}

TEST_CASE("sampling") {
  const FeatureSpec spec = small_spec();

  SUBCASE("fixed seed reproduces the sample sequence") {
    const PolicyParams p = random_params(spec, 51, 1.0);
    std::mt19937_64 a(99), b(99);
    std::vector<TokenId> ctx{1, 2, 3};
    for (int i = 0; i < 100; ++i) {
      const auto sa = sample_token(p, ctx, a, 0.7);
      const auto sb = sample_token(p, ctx, b, 0.7);
      REQUIRE(sa.token == sb.token);
      REQUIRE(sa.logprob == sb.logprob);
    }
  }

  SUBCASE("low temperature approaches argmax; reported logprob is at temperature 1") {
    const PolicyParams p = random_params(spec, 53, 2.0);
    const std::vector<TokenId> ctx{4, 5};
    const auto greedy = argmax_token(p, ctx);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
      const auto s = sample_token(p, ctx, rng, 1e-6);
      REQUIRE(s.token == greedy.token);
      REQUIRE(s.logprob == doctest::Approx(logprob(p, ctx, s.token)).epsilon(1e-12));
    }
  }

  SUBCASE("temperature must be positive") {
    const PolicyParams p = PolicyParams::zeros(spec);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(sample_token(p, std::vector<TokenId>{1}, rng, 0.0),
                    std::invalid_argument);
  }

  SUBCASE("empirical frequencies match softmax within 3 sigma") {
    const PolicyParams p = random_params(spec, 57, 1.0);
    const std::vector<TokenId> ctx{2};
    std::vector<double> expect(spec.vocab);
    for (TokenId t = 0; t < spec.vocab; ++t) expect[t] = std::exp(logprob(p, ctx, t));
    const int n = 100000;
    std::vector<int> counts(spec.vocab, 0);
    std::mt19937_64 rng(3);
    for (int i = 0; i < n; ++i) ++counts[sample_token(p, ctx, rng, 1.0).token];
    for (TokenId t = 0; t < spec.vocab; ++t) {
      const double mean = expect[t] * n;
      const double sigma = std::sqrt(n * expect[t] * (1 - expect[t]));
      REQUIRE(std::abs(counts[t] - mean) <= 3.0 * sigma + 1.0);
    }
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "gtpo_test_ckpt.bin";
  const PolicyParams p = random_params(small_spec(), 61, 3.0);
  save_checkpoint(p, 42, path.string());
  const Checkpoint ck = load_checkpoint(path.string());
  CHECK(ck.step == 42);
  CHECK(ck.params.spec == p.spec);
  REQUIRE(ck.params.theta.size() == p.theta.size());
  for (std::size_t i = 0; i < p.theta.size(); ++i) {
    REQUIRE(std::memcmp(&ck.params.theta[i], &p.theta[i], sizeof(double)) == 0);
  }
  fs::remove(path);
}

TEST_CASE("checkpoint version mismatch names both versions") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "gtpo_bad_ckpt.bin";
  const PolicyParams p = PolicyParams::zeros(small_spec());
  save_checkpoint(p, 1, path.string());
  // overwrite the version field (byte offset 8) with 99
  {
    std::FILE* f = std::fopen(path.string().c_str(), "r+b");
    REQUIRE(f != nullptr);
    std::fseek(f, 8, SEEK_SET);
    const std::uint32_t bad = 99;
    std::fwrite(&bad, sizeof(bad), 1, f);
    std::fclose(f);
  }
  try {
    load_checkpoint(path.string());
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("99") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }
  fs::remove(path);
}
