#include "curtail/estimation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "curtail/numeric.hpp"

namespace curtail {
namespace {

constexpr double kVarianceTolerance = 1e-8;

void require_interior(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw DomainError(fmt::format("theta must lie strictly inside (0,1), got {}", theta));
  }
}

}  // namespace

PostTestEstimate point_estimate(const MonitorState& state) {
  if (!state.terminal() || !state.m_star) {
    throw NonTerminalError(fmt::format("trial is still running at n={}", state.n));
  }
  PostTestEstimate est;
  est.m_star = *state.m_star;
  if (state.status == TrialStatus::StoppedRejected) {
    est.theta_hat =
        static_cast<double>(state.design.k_star + 1) / static_cast<double>(*state.m_star);
  } else {
    est.theta_hat = static_cast<double>(state.s_n) / static_cast<double>(state.design.n_star);
  }
  return est;
}

PostTestEstimate confidence_interval(double theta_hat, Count m_star, double gamma) {
  if (!(theta_hat >= 0.0 && theta_hat <= 1.0)) {
    throw DomainError(fmt::format("theta_hat must lie in [0,1], got {}", theta_hat));
  }
  if (m_star < 1) throw DomainError(fmt::format("m_star must be >= 1, got {}", m_star));
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError(fmt::format("gamma must lie in (0,1), got {}", gamma));
  }
  const double half = normal_quantile(1.0 - gamma / 2.0) *
                      std::sqrt(theta_hat * (1.0 - theta_hat) / static_cast<double>(m_star));
  PostTestEstimate est;
  est.theta_hat = theta_hat;
  est.m_star = m_star;
  est.interval = ConfidenceInterval{1.0 - gamma, std::max(0.0, theta_hat - half),
                                    std::min(1.0, theta_hat + half),
                                    theta_hat == 0.0 || theta_hat == 1.0};
  return est;
}

PostTestEstimate estimate(const MonitorState& state, double gamma) {
  const PostTestEstimate point = point_estimate(state);
  return confidence_interval(point.theta_hat, point.m_star, gamma);
}

EstimatorMoments estimator_moments(const TestDesign& design, double theta) {
  design.validate();
  require_interior(theta);
  const Count n = design.n_star;
  const Count k = design.k_star;
  const auto nd = static_cast<double>(n);
  const auto r = static_cast<double>(k + 1);

  // Completed without rejection: E[(S/N)^p ; S <= k*].
  double completed_first = 0.0;
  double completed_second = 0.0;
  if (k >= 2) {
    const double below = binom_cdf(k - 1, n - 1, theta);
    completed_first = theta * below;
    completed_second =
        (nd - 1.0) * theta * theta * binom_cdf(k - 2, n - 2, theta) / nd + theta * below / nd;
  } else {
    // The factorial-moment identity indexes S at k* - 2; sum directly instead.
    for (Count s = 0; s <= k; ++s) {
      const double p = binom_pmf(s, n, theta);
      const double ratio = static_cast<double>(s) / nd;
      completed_first += ratio * p;
      completed_second += ratio * ratio * p;
    }
  }

  // Stopped early at M = j <= N*: E[((k*+1)/M)^p ; M <= N*].
  const std::vector<double> pmf = negbin_pmf_range(k + 1, theta, k + 1, n);
  CompensatedSum inv;
  CompensatedSum inv_sq;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    if (pmf[i] == 0.0) continue;
    const double j = r + static_cast<double>(i);
    const double term = pmf[i] / j;
    inv.add(term);
    inv_sq.add(term / j);
  }

  EstimatorMoments m;
  m.mean = completed_first + r * inv.value();
  m.second_moment = completed_second + r * r * inv_sq.value();
  double variance = m.second_moment - m.mean * m.mean;
  if (variance < 0.0) {
    if (variance < -kVarianceTolerance * m.second_moment) {
      throw Error(fmt::format("negative estimator variance {} at theta={}", variance, theta));
    }
    variance = 0.0;
    m.variance_clamped = true;
  }
  m.variance = variance;
  return m;
}

MomentLimits moments_limit_check(double theta) {
  require_interior(theta);
  return {theta, 0.0};
}

}  // namespace curtail
