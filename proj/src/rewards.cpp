#include "gtpo/rewards.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "gtpo/embedding.hpp"

namespace gtpo {

double sequence_reward(const Trajectory& traj) {
  const double r_acc = traj.correct ? 1.0 : 0.0;
  const double r_format = traj.format_clean() ? 1.0 : 0.0;
  return std::min(r_acc, r_format);
}

std::vector<TurnReward> turn_rewards(const Trajectory& traj) {
  std::vector<TurnReward> out;
  out.reserve(traj.turns.size());
  for (const Turn& turn : traj.turns) {
    TurnReward r;
    if (turn.is_final && traj.correct) r.r_acc = 1.0;
    if (!turn.format_valid) r.r_format = -0.1;
    r.total = r.r_acc + r.r_format;
    out.push_back(r);
  }
  return out;
}

std::vector<TokenId> concat_code(const Trajectory& traj) {
  std::vector<TokenId> out;
  for (const Turn& turn : traj.turns) {
    if (turn.code) out.insert(out.end(), turn.code->begin(), turn.code->end());
  }
  return out;
}

std::vector<TokenId> shaping_content(const Trajectory& traj, ContentScope scope) {
  if (scope == ContentScope::code_only) return concat_code(traj);
  std::vector<TokenId> out;
  for (const Turn& turn : traj.turns) {
    auto pol = turn.policy_tokens();
    out.insert(out.end(), pol.begin(), pol.end());
  }
  return out;
}

namespace {

struct Block {
  std::size_t a = 0, b = 0, len = 0;
};

// Longest matching block between a[alo,ahi) and b[blo,bhi), ties broken
// toward the earliest start in a, then in b. Rolling j2len table over b,
// as in difflib's find_longest_match but with no junk heuristic.
Block longest_match(std::span<const TokenId> a, std::span<const TokenId> b,
                    std::size_t alo, std::size_t ahi, std::size_t blo,
                    std::size_t bhi) {
  Block best{alo, blo, 0};
  std::unordered_map<std::size_t, std::size_t> j2len;
  std::unordered_map<std::size_t, std::size_t> new_j2len;
  for (std::size_t i = alo; i < ahi; ++i) {
    new_j2len.clear();
    for (std::size_t j = blo; j < bhi; ++j) {
      if (a[i] != b[j]) continue;
      std::size_t k = 1;
      if (j > blo) {
        auto it = j2len.find(j - 1);
        if (it != j2len.end()) k = it->second + 1;
      }
      new_j2len[j] = k;
      if (k > best.len) best = Block{i - k + 1, j - k + 1, k};
    }
    std::swap(j2len, new_j2len);
  }
  return best;
}

std::size_t matched_total(std::span<const TokenId> a, std::span<const TokenId> b,
                          std::size_t alo, std::size_t ahi, std::size_t blo,
                          std::size_t bhi) {
  Block m = longest_match(a, b, alo, ahi, blo, bhi);
  if (m.len == 0) return 0;
  return m.len + matched_total(a, b, alo, m.a, blo, m.b) +
         matched_total(a, b, m.a + m.len, ahi, m.b + m.len, bhi);
}

}  // namespace

double ratcliff_similarity(std::span<const TokenId> a, std::span<const TokenId> b) {
  if (a.empty() && b.empty()) return 0.0;
  // Tie-breaking in the block search depends on argument order, so order the
  // pair canonically first; this makes the score exactly symmetric.
  const bool swap = a.size() > b.size() ||
                    (a.size() == b.size() &&
                     std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end()));
  if (swap) std::swap(a, b);
  const std::size_t m = matched_total(a, b, 0, a.size(), 0, b.size());
  return 2.0 * static_cast<double>(m) / static_cast<double>(a.size() + b.size());
}

std::vector<double> shape_group_rewards(const Group& group, const ShapingConfig& cfg,
                                        EmbeddingClient* embedder) {
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    throw std::invalid_argument("shape_group_rewards: alpha must be in [0,1]");

  const std::size_t n = group.members.size();
  std::vector<double> shaped(n, 0.0);
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < n; ++i) {
    if (group.members[i].correct) {
      shaped[i] = 1.0;
      positives.push_back(i);
    }
  }
  if (positives.empty() || cfg.scorer == Scorer::none) return shaped;

  std::vector<std::vector<TokenId>> content(n);
  for (std::size_t i = 0; i < n; ++i) {
    content[i] = shaping_content(group.members[i], cfg.content_scope);
  }

  std::vector<std::vector<double>> vectors;
  if (cfg.scorer == Scorer::embedding) {
    if (!embedder)
      throw std::runtime_error(
          "shape_group_rewards: embedding scorer requested but no endpoint is "
          "configured");
    std::vector<std::string> texts(n);
    for (std::size_t i = 0; i < n; ++i) texts[i] = vocab::decode(content[i]);
    vectors = embedder->embed(texts);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (group.members[i].correct) continue;
    double sum = 0.0;
    for (std::size_t p : positives) {
      if (cfg.scorer == Scorer::embedding) {
        sum += cosine_similarity_clamped(vectors[i], vectors[p]);
      } else {
        sum += ratcliff_similarity(content[i], content[p]);
      }
    }
    shaped[i] = cfg.alpha / static_cast<double>(positives.size()) * sum;
  }
  return shaped;
}

}  // namespace gtpo
