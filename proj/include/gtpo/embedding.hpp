#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gtpo {

/// Connection settings for an external embedding endpoint. The request body
/// is {"texts": [...]} and the response {"vectors": [[...], ...]}, one fixed
/// dimension vector per input text.
struct EmbeddingConfig {
  std::string base_url;           // e.g. http://127.0.0.1:8900
  std::string path = "/embed";
  std::string auth_header;        // optional "Name: value"
  int timeout_ms = 5000;
  std::size_t max_batch = 64;     // texts per request
  std::size_t max_in_flight = 4;  // parallel requests when batching splits
};

class EmbeddingClient {
 public:
  explicit EmbeddingClient(EmbeddingConfig cfg);

  /// Embed all texts, batching and issuing requests concurrently up to the
  /// configured cap. Throws on transport errors, timeouts, or a response
  /// that does not match the contract.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts);

  /// Convenience: cosine similarity of two freshly embedded texts.
  double similarity(const std::string& a, const std::string& b);

  const EmbeddingConfig& config() const { return cfg_; }

  /// Build a client from GTPO_EMBED_URL / GTPO_EMBED_AUTH environment
  /// variables; returns false (and leaves out untouched) when unset.
  static bool from_environment(EmbeddingClient& out);

 private:
  EmbeddingConfig cfg_;
};

/// Cosine similarity clamped to [0, 1]; zero vectors score 0.
double cosine_similarity_clamped(std::span<const double> a, std::span<const double> b);

}  // namespace gtpo
