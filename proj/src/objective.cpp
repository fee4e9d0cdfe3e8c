#include "gtpo/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace gtpo {

std::vector<double> importance_ratios(std::span<const double> new_logprobs,
                                      std::span<const double> old_logprobs) {
  if (new_logprobs.size() != old_logprobs.size())
    throw std::invalid_argument("importance_ratios: length mismatch");
  std::vector<double> out(new_logprobs.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (!std::isfinite(old_logprobs[t]))
      throw std::invalid_argument("importance_ratios: non-finite old logprob");
    out[t] = std::exp(new_logprobs[t] - old_logprobs[t]);
  }
  return out;
}

namespace {

struct TokenTerm {
  double contribution = 0.0;
  bool clipped = false;        // clipped branch strictly smaller
  bool zero_slope = false;     // clipped and binding: no gradient through w
};

TokenTerm surrogate_term(double w, double adv, const ClipConfig& clip) {
  const double lo = 1.0 - clip.eps_low;
  const double hi = 1.0 + clip.eps_high;
  const double clipped_w = std::min(std::max(w, lo), hi);
  const double unclipped = w * adv;
  const double clipped = clipped_w * adv;
  TokenTerm term;
  if (clipped < unclipped) {
    term.contribution = clipped;
    term.clipped = true;
    term.zero_slope = (w < lo) || (w > hi);
  } else {
    term.contribution = unclipped;
  }
  return term;
}

}  // namespace

LossReport clipped_surrogate(std::span<const double> ratios,
                             std::span<const double> advantages,
                             const ClipConfig& clip, std::size_t token_count) {
  if (ratios.size() != advantages.size())
    throw std::invalid_argument("clipped_surrogate: ratio/advantage length mismatch");
  if (token_count == 0)
    throw std::invalid_argument("clipped_surrogate: token_count must be positive");
  if (clip.eps_low <= 0.0 || clip.eps_high <= 0.0)
    throw std::invalid_argument("clipped_surrogate: clip ranges must be positive");
  LossReport report;
  report.token_count = token_count;
  report.per_token_contribution.reserve(ratios.size());
  std::size_t clipped = 0;
  double sum = 0.0;
  for (std::size_t t = 0; t < ratios.size(); ++t) {
    const TokenTerm term = surrogate_term(ratios[t], advantages[t], clip);
    report.per_token_contribution.push_back(term.contribution);
    sum += term.contribution;
    if (term.clipped) ++clipped;
  }
  report.objective_value = sum / static_cast<double>(token_count);
  report.clipped_fraction =
      ratios.empty() ? 0.0 : static_cast<double>(clipped) / static_cast<double>(ratios.size());
  return report;
}

namespace {

struct WalkCallbacks {
  // Called for each policy token with its running context and flat index.
  virtual void on_policy_token(std::span<const TokenId> context, TokenId token,
                               std::size_t token_idx) = 0;
  virtual ~WalkCallbacks() = default;
};

// Replay a trajectory in sampling order: context grows by every token, but
// only policy tokens trigger the callback.
void walk_policy_tokens(const Trajectory& traj, WalkCallbacks& cb) {
  std::vector<TokenId> context = traj.prompt;
  std::size_t token_idx = 0;
  for (const Turn& turn : traj.turns) {
    for (TokenId tok : turn.policy_tokens()) {
      cb.on_policy_token(context, tok, token_idx++);
      context.push_back(tok);
    }
    if (turn.feedback) {
      context.insert(context.end(), turn.feedback->begin(), turn.feedback->end());
    }
  }
}

}  // namespace

GradientReport objective_gradient(const PolicyParams& params,
                                  std::span<const Trajectory> trajectories,
                                  std::span<const std::vector<double>> token_advantages,
                                  const ClipConfig& clip) {
  if (trajectories.size() != token_advantages.size())
    throw std::invalid_argument("objective_gradient: batch size mismatch");

  std::size_t token_count = 0;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const std::size_t n = trajectories[i].policy_token_count();
    if (!trajectories[i].old_logprobs)
      throw std::invalid_argument("objective_gradient: member " + std::to_string(i) +
                                  " has no old_logprobs");
    if (trajectories[i].old_logprobs->size() != n)
      throw std::invalid_argument("objective_gradient: old_logprobs misaligned");
    if (token_advantages[i].size() != n)
      throw std::invalid_argument("objective_gradient: advantages misaligned");
    token_count += n;
  }
  if (token_count == 0)
    throw std::invalid_argument("objective_gradient: batch has no policy tokens");

  GradientReport report;
  report.grad.assign(params.theta.size(), 0.0);
  report.loss.token_count = token_count;
  report.loss.per_token_contribution.reserve(token_count);

  const double inv_n = 1.0 / static_cast<double>(token_count);
  double sum = 0.0;
  std::size_t clipped = 0;

  struct GradWalker final : WalkCallbacks {
    const PolicyParams& params;
    const std::vector<double>& old_lp;
    const std::vector<double>& advs;
    const ClipConfig& clip;
    GradientReport& report;
    double inv_n;
    double* sum;
    std::size_t* clipped;

    GradWalker(const PolicyParams& p, const std::vector<double>& o,
               const std::vector<double>& a, const ClipConfig& c, GradientReport& r,
               double inv, double* s, std::size_t* cl)
        : params(p), old_lp(o), advs(a), clip(c), report(r), inv_n(inv), sum(s),
          clipped(cl) {}

    void on_policy_token(std::span<const TokenId> context, TokenId token,
                         std::size_t t) override {
      const double new_lp = logprob(params, context, token);
      const double w = std::exp(new_lp - old_lp[t]);
      const TokenTerm term = surrogate_term(w, advs[t], clip);
      report.loss.per_token_contribution.push_back(term.contribution);
      *sum += term.contribution;
      if (term.clipped) ++*clipped;
      if (!term.zero_slope) {
        // d(w*A)/d theta = A * w * d logprob / d theta
        accumulate_logprob_grad(params, context, token, inv_n * advs[t] * w,
                                report.grad);
      }
    }
  };

  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    GradWalker walker(params, *trajectories[i].old_logprobs, token_advantages[i], clip,
                      report, inv_n, &sum, &clipped);
    walk_policy_tokens(trajectories[i], walker);
  }

  report.loss.objective_value = sum * inv_n;
  report.loss.clipped_fraction =
      static_cast<double>(clipped) / static_cast<double>(token_count);
  return report;
}

LossReport objective_value(const PolicyParams& params,
                           std::span<const Trajectory> trajectories,
                           std::span<const std::vector<double>> token_advantages,
                           const ClipConfig& clip) {
  std::vector<double> ratios;
  std::vector<double> advantages;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& traj = trajectories[i];
    if (!traj.old_logprobs)
      throw std::invalid_argument("objective_value: missing old_logprobs");

    struct ValueWalker final : WalkCallbacks {
      const PolicyParams& params;
      const std::vector<double>& old_lp;
      std::vector<double>& ratios;
      ValueWalker(const PolicyParams& p, const std::vector<double>& o,
                  std::vector<double>& r)
          : params(p), old_lp(o), ratios(r) {}
      void on_policy_token(std::span<const TokenId> context, TokenId token,
                           std::size_t t) override {
        ratios.push_back(std::exp(logprob(params, context, token) - old_lp[t]));
      }
    } walker(params, *traj.old_logprobs, ratios);
    walk_policy_tokens(traj, walker);
    advantages.insert(advantages.end(), token_advantages[i].begin(),
                      token_advantages[i].end());
  }
  return clipped_surrogate(ratios, advantages, ClipConfig(clip), ratios.size());
}

}  // namespace gtpo
