#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtpo/vocab.hpp"

namespace gtpo {

/// Shape of the linear-softmax policy: logits are theta (features x vocab)
/// applied to hashed indicators of the last `context` tokens.
struct FeatureSpec {
  std::uint32_t context = 8;     // window length k
  std::uint32_t features = 4096; // hashed feature dimension F
  std::uint32_t vocab = static_cast<std::uint32_t>(vocab::kSize);

  bool operator==(const FeatureSpec&) const = default;
  std::size_t param_count() const {
    return static_cast<std::size_t>(features) * vocab;
  }
};

struct PolicyParams {
  FeatureSpec spec;
  std::vector<double> theta;  // length features * vocab, feature-major

  static PolicyParams zeros(FeatureSpec spec);
};

/// Hashed indicator features of the last k tokens: one (offset, token)
/// indicator per window position, plus a sequence-start marker while the
/// window reaches past the first token. An empty context activates the
/// begin-of-sequence feature only.
void context_features(std::span<const TokenId> context, const FeatureSpec& spec,
                      std::vector<std::uint32_t>& out);
std::vector<std::uint32_t> context_features(std::span<const TokenId> context,
                                            const FeatureSpec& spec);

/// Unnormalized scores for every vocabulary entry under the given context.
void policy_logits(const PolicyParams& params, std::span<const TokenId> context,
                   std::vector<double>& out);

/// log pi(token | context), always <= 0; log-sum-exp is max-subtracted.
double logprob(const PolicyParams& params, std::span<const TokenId> context,
               TokenId token);

/// Exact gradient of logprob as sparse (index, value) pairs over theta.
std::vector<std::pair<std::size_t, double>> logprob_grad(
    const PolicyParams& params, std::span<const TokenId> context, TokenId token);

/// Accumulate scale * d logprob / d theta into grad (dense, theta-sized).
void accumulate_logprob_grad(const PolicyParams& params,
                             std::span<const TokenId> context, TokenId token,
                             double scale, std::span<double> grad);

struct SampledToken {
  TokenId token = 0;
  double logprob = 0.0;  // at temperature 1, the stored old_logprob
};

/// Categorical draw from softmax(logits / temperature); temperature must be
/// positive. The reported logprob is always the temperature-1 value.
SampledToken sample_token(const PolicyParams& params, std::span<const TokenId> context,
                          std::mt19937_64& rng, double temperature);

/// Greedy decode: the argmax token plus its temperature-1 logprob.
SampledToken argmax_token(const PolicyParams& params, std::span<const TokenId> context);

/// Checkpoint: fixed binary header (version, k, F, V, step) + raw doubles.
/// Write -> read round-trips bit-exactly.
void save_checkpoint(const PolicyParams& params, std::uint64_t step,
                     const std::string& path);
struct Checkpoint {
  PolicyParams params;
  std::uint64_t step = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gtpo
