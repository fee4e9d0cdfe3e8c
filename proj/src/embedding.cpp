#include "gtpo/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <json.hpp>
#include <semaphore>
#include <stdexcept>

// cpp-httplib: client only, keep the build lean
#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

namespace gtpo {

using nlohmann::json;

EmbeddingClient::EmbeddingClient(EmbeddingConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty())
    throw std::invalid_argument("EmbeddingClient: base_url is empty");
  if (cfg_.max_batch == 0) cfg_.max_batch = 1;
  if (cfg_.max_in_flight == 0) cfg_.max_in_flight = 1;
}

namespace {

std::vector<std::vector<double>> post_batch(const EmbeddingConfig& cfg,
                                            const std::vector<std::string>& texts) {
  httplib::Client client(cfg.base_url);
  client.set_connection_timeout(0, cfg.timeout_ms * 1000);
  client.set_read_timeout(0, cfg.timeout_ms * 1000);
  client.set_write_timeout(0, cfg.timeout_ms * 1000);

  httplib::Headers headers;
  if (!cfg.auth_header.empty()) {
    auto colon = cfg.auth_header.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("EmbeddingClient: auth header must be 'Name: value'");
    std::string name = cfg.auth_header.substr(0, colon);
    std::string value = cfg.auth_header.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    headers.emplace(name, value);
  }

  json body;
  body["texts"] = texts;
  auto res = client.Post(cfg.path, headers, body.dump(), "application/json");
  if (!res) {
    throw std::runtime_error("embedding endpoint unreachable: " +
                             httplib::to_string(res.error()) + " (" + cfg.base_url +
                             cfg.path + ")");
  }
  if (res->status != 200) {
    throw std::runtime_error("embedding endpoint returned HTTP " +
                             std::to_string(res->status));
  }
  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("embedding response is not JSON: ") + e.what());
  }
  if (!parsed.contains("vectors") || !parsed.at("vectors").is_array())
    throw std::runtime_error("embedding response missing 'vectors' array");
  auto vectors = parsed.at("vectors").get<std::vector<std::vector<double>>>();
  if (vectors.size() != texts.size())
    throw std::runtime_error("embedding response has " + std::to_string(vectors.size()) +
                             " vectors for " + std::to_string(texts.size()) + " texts");
  return vectors;
}

}  // namespace

std::vector<std::vector<double>> EmbeddingClient::embed(
    const std::vector<std::string>& texts) {
  if (texts.empty()) return {};

  std::vector<std::pair<std::size_t, std::vector<std::string>>> batches;
  for (std::size_t start = 0; start < texts.size(); start += cfg_.max_batch) {
    const std::size_t end = std::min(texts.size(), start + cfg_.max_batch);
    batches.emplace_back(start, std::vector<std::string>(texts.begin() + start,
                                                         texts.begin() + end));
  }

  std::vector<std::vector<double>> out(texts.size());
  std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(cfg_.max_in_flight));
  std::vector<std::future<void>> jobs;
  jobs.reserve(batches.size());
  for (auto& [start, batch] : batches) {
    slots.acquire();
    jobs.push_back(std::async(std::launch::async, [this, start = start, &batch, &out,
                                                   &slots]() {
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{slots};
      auto vectors = post_batch(cfg_, batch);
      std::copy(vectors.begin(), vectors.end(), out.begin() + start);
    }));
  }
  for (auto& job : jobs) job.get();  // rethrows the first failure
  return out;
}

double EmbeddingClient::similarity(const std::string& a, const std::string& b) {
  auto vectors = embed({a, b});
  return cosine_similarity_clamped(vectors[0], vectors[1]);
}

bool EmbeddingClient::from_environment(EmbeddingClient& out) {
  const char* url = std::getenv("GTPO_EMBED_URL");
  if (url == nullptr || *url == '\0') return false;
  EmbeddingConfig cfg;
  cfg.base_url = url;
  if (const char* auth = std::getenv("GTPO_EMBED_AUTH")) cfg.auth_header = auth;
  if (const char* timeout = std::getenv("GTPO_EMBED_TIMEOUT_MS")) {
    cfg.timeout_ms = std::max(1, std::atoi(timeout));
  }
  out = EmbeddingClient(std::move(cfg));
  return true;
}

double cosine_similarity_clamped(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

}  // namespace gtpo
