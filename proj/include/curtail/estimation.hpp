#pragma once
// Estimating the side-effect probability once a trial has terminated.

#include <optional>

#include "curtail/monitor.hpp"

namespace curtail {

struct ConfidenceInterval {
  double level = 0.95;  // 1 - gamma
  double lower = 0.0;
  double upper = 0.0;
  bool degenerate = false;  // zero width because theta_hat is 0 or 1
};

struct PostTestEstimate {
  double theta_hat = 0.0;
  Count m_star = 0;
  std::optional<ConfidenceInterval> interval;
};

/// S/N* when the trial completed, (k*+1)/M* when it stopped early.
/// Throws NonTerminalError for a running trial.
PostTestEstimate point_estimate(const MonitorState& state);

/// Wald interval theta_hat -/+ z_{1-gamma/2} sqrt(theta_hat (1 - theta_hat) / m_star),
/// clipped to [0,1].
PostTestEstimate confidence_interval(double theta_hat, Count m_star, double gamma);

PostTestEstimate estimate(const MonitorState& state, double gamma);

struct EstimatorMoments {
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
  bool variance_clamped = false;
};

/// Exact first two moments of the post-test estimator under theta. The
/// early-stop part is a sum over the negative binomial law of M, evaluated in
/// one linear pass.
EstimatorMoments estimator_moments(const TestDesign& design, double theta);

struct MomentLimits {
  double mean = 0.0;
  double variance = 0.0;
};

/// Limits of the estimator moments as delta -> 0: mean theta, variance 0.
MomentLimits moments_limit_check(double theta);

}  // namespace curtail
