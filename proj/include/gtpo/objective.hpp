#pragma once

#include <span>
#include <vector>

#include "gtpo/policy.hpp"
#include "gtpo/trajectory.hpp"

namespace gtpo {

/// Asymmetric clip range [1 - eps_low, 1 + eps_high]; both must be positive.
struct ClipConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;
};

struct LossReport {
  double objective_value = 0.0;
  std::vector<double> per_token_contribution;
  double clipped_fraction = 0.0;
  std::size_t token_count = 0;
};

/// Per-token exp(new - old); lengths must agree.
std::vector<double> importance_ratios(std::span<const double> new_logprobs,
                                      std::span<const double> old_logprobs);

/// Token-normalized clipped surrogate: mean over token_count of
/// min(w*A, clip(w, 1-eps_low, 1+eps_high)*A). clipped_fraction is the share
/// of tokens where the clipped branch is strictly smaller.
LossReport clipped_surrogate(std::span<const double> ratios,
                             std::span<const double> advantages,
                             const ClipConfig& clip, std::size_t token_count);

struct GradientReport {
  std::vector<double> grad;  // d objective / d theta, ascent direction
  LossReport loss;
  /// Gradient evaluations attributed to environment feedback tokens; zero by
  /// construction, kept as an assertable counter.
  std::size_t feedback_gradient_reads = 0;
};

/// Exact gradient of the clipped surrogate with respect to the policy
/// parameters, treating advantages and old logprobs as constants. Tokens on
/// a binding clipped branch contribute no gradient. token_advantages[i]
/// aligns with member i's policy tokens.
GradientReport objective_gradient(const PolicyParams& params,
                                  std::span<const Trajectory> trajectories,
                                  std::span<const std::vector<double>> token_advantages,
                                  const ClipConfig& clip);

/// Forward-only evaluation of the same objective (used by gradient checks).
LossReport objective_value(const PolicyParams& params,
                           std::span<const Trajectory> trajectories,
                           std::span<const std::vector<double>> token_advantages,
                           const ClipConfig& clip);

}  // namespace gtpo
