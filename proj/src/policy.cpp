#include "gtpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gtpo {
namespace {

constexpr std::uint64_t kOffsetSalt = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kBosSalt = 0x94d049bb133111ebull;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ v);
}

inline std::uint32_t bucket(std::uint64_t h, std::uint32_t features) {
  return static_cast<std::uint32_t>(h % features);
}

}  // namespace

PolicyParams PolicyParams::zeros(FeatureSpec spec) {
  PolicyParams p;
  p.spec = spec;
  p.theta.assign(p.spec.param_count(), 0.0);
  return p;
}

void context_features(std::span<const TokenId> context, const FeatureSpec& spec,
                      std::vector<std::uint32_t>& out) {
  out.clear();
  const std::size_t len = context.size();
  const std::uint32_t k = spec.context;
  const std::uint32_t reach = static_cast<std::uint32_t>(std::min<std::size_t>(k, len));
  for (std::uint32_t o = 1; o <= reach; ++o) {
    const std::uint64_t h = mix(mix(kOffsetSalt, o), context[len - o]);
    out.push_back(bucket(h, spec.features));
  }
  if (len < k) {
    // sequence-start marker at the first out-of-range offset; for an empty
    // context this begin-of-sequence feature is the only one
    out.push_back(bucket(mix(kBosSalt, static_cast<std::uint64_t>(len) + 1),
                         spec.features));
  }
}

std::vector<std::uint32_t> context_features(std::span<const TokenId> context,
                                            const FeatureSpec& spec) {
  std::vector<std::uint32_t> out;
  context_features(context, spec, out);
  return out;
}

void policy_logits(const PolicyParams& params, std::span<const TokenId> context,
                   std::vector<double>& out) {
  const std::uint32_t v_count = params.spec.vocab;
  out.assign(v_count, 0.0);
  thread_local std::vector<std::uint32_t> feats;
  context_features(context, params.spec, feats);
  for (std::uint32_t f : feats) {
    const double* row = params.theta.data() + static_cast<std::size_t>(f) * v_count;
    for (std::uint32_t v = 0; v < v_count; ++v) out[v] += row[v];
  }
}

namespace {

// log softmax denominator with max subtraction; returns (max, log sum exp).
std::pair<double, double> log_norm(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  return {mx, std::log(sum)};
}

}  // namespace

double logprob(const PolicyParams& params, std::span<const TokenId> context,
               TokenId token) {
  if (token >= params.spec.vocab)
    throw std::invalid_argument("logprob: token outside vocabulary");
  std::vector<double> logits;
  policy_logits(params, context, logits);
  const auto [mx, lse] = log_norm(logits);
  return logits[token] - mx - lse;
}

std::vector<std::pair<std::size_t, double>> logprob_grad(
    const PolicyParams& params, std::span<const TokenId> context, TokenId token) {
  if (token >= params.spec.vocab)
    throw std::invalid_argument("logprob_grad: token outside vocabulary");
  std::vector<double> logits;
  policy_logits(params, context, logits);
  const auto [mx, lse] = log_norm(logits);
  const std::uint32_t v_count = params.spec.vocab;
  std::vector<double> probs(v_count);
  for (std::uint32_t v = 0; v < v_count; ++v) probs[v] = std::exp(logits[v] - mx - lse);

  std::vector<std::pair<std::size_t, double>> out;
  auto feats = context_features(context, params.spec);
  out.reserve(feats.size() * v_count);
  for (std::uint32_t f : feats) {
    const std::size_t base = static_cast<std::size_t>(f) * v_count;
    for (std::uint32_t v = 0; v < v_count; ++v) {
      const double g = (v == token ? 1.0 : 0.0) - probs[v];
      out.emplace_back(base + v, g);
    }
  }
  return out;
}

void accumulate_logprob_grad(const PolicyParams& params,
                             std::span<const TokenId> context, TokenId token,
                             double scale, std::span<double> grad) {
  if (grad.size() != params.theta.size())
    throw std::invalid_argument("accumulate_logprob_grad: gradient size mismatch");
  std::vector<double> logits;
  policy_logits(params, context, logits);
  const auto [mx, lse] = log_norm(logits);
  const std::uint32_t v_count = params.spec.vocab;
  thread_local std::vector<std::uint32_t> feats;
  context_features(context, params.spec, feats);
  for (std::uint32_t f : feats) {
    double* row = grad.data() + static_cast<std::size_t>(f) * v_count;
    for (std::uint32_t v = 0; v < v_count; ++v) {
      const double p = std::exp(logits[v] - mx - lse);
      row[v] += scale * ((v == token ? 1.0 : 0.0) - p);
    }
  }
}

namespace {

// 53-bit uniform in [0,1); fixed construction so sampling is reproducible
// across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

SampledToken sample_token(const PolicyParams& params, std::span<const TokenId> context,
                          std::mt19937_64& rng, double temperature) {
  if (temperature <= 0.0)
    throw std::invalid_argument("sample_token: temperature must be positive");
  std::vector<double> logits;
  policy_logits(params, context, logits);

  std::vector<double> scaled(logits.size());
  for (std::size_t v = 0; v < logits.size(); ++v) scaled[v] = logits[v] / temperature;
  const double mx = *std::max_element(scaled.begin(), scaled.end());
  double total = 0.0;
  std::vector<double> weights(scaled.size());
  for (std::size_t v = 0; v < scaled.size(); ++v) {
    weights[v] = std::exp(scaled[v] - mx);
    total += weights[v];
  }
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  TokenId chosen = static_cast<TokenId>(weights.size() - 1);
  for (std::size_t v = 0; v < weights.size(); ++v) {
    acc += weights[v];
    if (u < acc) {
      chosen = static_cast<TokenId>(v);
      break;
    }
  }
  const auto [m1, lse1] = log_norm(logits);
  return {chosen, logits[chosen] - m1 - lse1};
}

SampledToken argmax_token(const PolicyParams& params, std::span<const TokenId> context) {
  std::vector<double> logits;
  policy_logits(params, context, logits);
  const std::size_t best =
      static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) -
                               logits.begin());
  const auto [mx, lse] = log_norm(logits);
  return {static_cast<TokenId>(best), logits[best] - mx - lse};
}

namespace {

constexpr char kMagic[8] = {'G', 'T', 'P', 'O', 'P', 'O', 'L', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const char* what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error(std::string("checkpoint: truncated ") + what);
  return value;
}

}  // namespace

void save_checkpoint(const PolicyParams& params, std::uint64_t step,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kCheckpointVersion);
  write_raw(out, params.spec.context);
  write_raw(out, params.spec.features);
  write_raw(out, params.spec.vocab);
  write_raw(out, step);
  out.write(reinterpret_cast<const char*>(params.theta.data()),
            static_cast<std::streamsize>(params.theta.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const auto version = read_raw<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: format version " + std::to_string(version) +
                             " does not match supported version " +
                             std::to_string(kCheckpointVersion));
  }
  Checkpoint ck;
  ck.params.spec.context = read_raw<std::uint32_t>(in, "context length");
  ck.params.spec.features = read_raw<std::uint32_t>(in, "feature count");
  ck.params.spec.vocab = read_raw<std::uint32_t>(in, "vocab size");
  ck.step = read_raw<std::uint64_t>(in, "step");
  ck.params.theta.resize(ck.params.spec.param_count());
  in.read(reinterpret_cast<char*>(ck.params.theta.data()),
          static_cast<std::streamsize>(ck.params.theta.size() * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated parameters in " + path);
  return ck;
}

}  // namespace gtpo
