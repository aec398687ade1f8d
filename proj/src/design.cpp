#include "curtail/design.hpp"

#include <cmath>

#include <fmt/format.h>

#include "curtail/error.hpp"

namespace curtail {
namespace {

bool open_unit(double p) { return p > 0.0 && p < 1.0; }

double upper_quantile(double p) { return normal_quantile(1.0 - p); }

// The unrounded critical-count expression.
double critical_count_value(Count n, double theta0, double alpha) {
  const auto nd = static_cast<double>(n);
  return nd * (upper_quantile(alpha) * std::sqrt(theta0 * (1.0 - theta0) / nd) + theta0) - 0.5;
}

Count round_half_away(double x) { return static_cast<Count>(std::llround(x)); }

}  // namespace

std::string to_string(DesignMode mode) {
  return mode == DesignMode::exact ? "exact" : "approximate";
}

DesignMode design_mode_from_string(const std::string& text) {
  if (text == "exact") return DesignMode::exact;
  if (text == "approximate") return DesignMode::approximate;
  throw DomainError(fmt::format("unknown design mode '{}'", text));
}

void DesignParams::validate() const {
  if (!open_unit(alpha)) throw DomainError(fmt::format("alpha must lie in (0,1), got {}", alpha));
  if (!open_unit(beta)) throw DomainError(fmt::format("beta must lie in (0,1), got {}", beta));
  if (!(theta0 > 0.0 && theta0 < theta1 && theta1 < 1.0)) {
    throw DomainError(
        fmt::format("need 0 < theta0 < theta1 < 1, got theta0={}, theta1={}", theta0, theta1));
  }
}

void LocalDesignParams::validate() const {
  if (!open_unit(alpha)) throw DomainError(fmt::format("alpha must lie in (0,1), got {}", alpha));
  if (!open_unit(beta)) throw DomainError(fmt::format("beta must lie in (0,1), got {}", beta));
  if (!open_unit(theta0)) {
    throw DomainError(fmt::format("theta0 must lie in (0,1), got {}", theta0));
  }
  if (!(delta > 0.0) || !(theta0 * (1.0 + delta) < 1.0)) {
    throw DomainError(fmt::format("need delta > 0 and theta0 (1 + delta) < 1, got delta={}", delta));
  }
}

DesignParams LocalDesignParams::to_design_params() const {
  return {alpha, beta, theta0, theta0 * (1.0 + delta)};
}

void TestDesign::validate() const {
  if (n_star < 1 || k_star < 0 || k_star >= n_star) {
    throw DomainError(fmt::format("invalid design: need 0 <= k* < N*, got N*={}, k*={}", n_star,
                                  k_star));
  }
}

double approx_sample_size(const DesignParams& params) {
  params.validate();
  const double t0 = params.theta0;
  const double t1 = params.theta1;
  const double root = (upper_quantile(params.alpha) * std::sqrt(t0 * (1.0 - t0)) +
                       upper_quantile(params.beta) * std::sqrt(t1 * (1.0 - t1))) /
                      (t1 - t0);
  return root * root;
}

double local_sample_size(const LocalDesignParams& params) {
  params.validate();
  const double t0 = params.theta0;
  const double d = params.delta;
  const double root =
      upper_quantile(params.alpha) / d * std::sqrt((1.0 - t0) / t0) +
      upper_quantile(params.beta) * std::sqrt((1.0 + d) / (d * d) * (1.0 / t0 - 1.0 - d));
  return root * root;
}

Count k_for_n(Count n, double theta0, double alpha) {
  if (n < 1) throw DomainError(fmt::format("k_for_n requires n >= 1, got {}", n));
  if (!open_unit(theta0)) throw DomainError(fmt::format("theta0 must lie in (0,1), got {}", theta0));
  if (!open_unit(alpha)) throw DomainError(fmt::format("alpha must lie in (0,1), got {}", alpha));
  const Count k = round_half_away(critical_count_value(n, theta0, alpha));
  if (k < 0 || k > n - 1) {
    throw DegenerateDesignError(
        fmt::format("critical count {} falls outside [0, {}] for n={}", k, n - 1, n));
  }
  return k;
}

Count n_for_k(Count k, double theta0, double alpha) {
  if (k < 0) throw DomainError(fmt::format("n_for_k requires k >= 0, got {}", k));
  if (!open_unit(theta0)) throw DomainError(fmt::format("theta0 must lie in (0,1), got {}", theta0));
  if (!open_unit(alpha)) throw DomainError(fmt::format("alpha must lie in (0,1), got {}", alpha));

  // With u = sqrt(N) the unrounded count is theta0 u^2 + z c u - 1/2, a convex
  // quadratic with exactly one positive root for the level k.
  const double z = upper_quantile(alpha);
  const double c = std::sqrt(theta0 * (1.0 - theta0));
  const double target = static_cast<double>(k);
  const double u = (-z * c + std::sqrt(z * z * c * c + 4.0 * theta0 * (target + 0.5))) /
                   (2.0 * theta0);
  Count n = std::max<Count>(1, static_cast<Count>(std::ceil(u * u)));
  while (n > 1 && critical_count_value(n - 1, theta0, alpha) >= target) --n;
  while (critical_count_value(n, theta0, alpha) < target) ++n;

  const Count reached = round_half_away(critical_count_value(n, theta0, alpha));
  if (reached != k || k > n - 1) {
    const Count below = n > 1 ? round_half_away(critical_count_value(n - 1, theta0, alpha)) : 0;
    throw NoSolutionError(fmt::format(
        "critical count {} is not attainable: N={} gives {}, N={} gives {}", k, n - 1, below, n,
        reached));
  }
  return n;
}

TestDesign make_design(Count n_star, Count k_star, const DesignParams& params, DesignMode mode) {
  params.validate();
  if (n_star < 1 || k_star < 0 || k_star > n_star - 1) {
    throw DegenerateDesignError(
        fmt::format("degenerate design N*={}, k*={} (need 0 <= k* < N*)", n_star, k_star));
  }
  TestDesign design;
  design.n_star = n_star;
  design.k_star = k_star;
  design.attained_alpha = binom_tail(k_star, n_star, params.theta0);
  design.attained_beta = binom_cdf(k_star, n_star, params.theta1);
  design.mode = mode;
  design.params = params;
  return design;
}

TestDesign design_approx(const DesignParams& params) {
  const Count n = round_half_away(approx_sample_size(params));
  if (n < 1) {
    throw DegenerateDesignError(fmt::format("sample size formula gives N*={}", n));
  }
  return make_design(n, k_for_n(n, params.theta0, params.alpha), params, DesignMode::approximate);
}

TestDesign design_local(const LocalDesignParams& params) {
  params.validate();
  TestDesign design = design_approx(params.to_design_params());
  design.delta = params.delta;
  return design;
}

TestDesign design_exact(const DesignParams& params, ExactSearchOptions options) {
  params.validate();
  // The smallest k meeting the size constraint never decreases with N, so a
  // single forward sweep over (N, k) suffices.
  Count k = 0;
  for (Count n = 1; n <= options.max_n; ++n) {
    while (k < n && binom_tail(k, n, params.theta0) > params.alpha) ++k;
    if (k < n && binom_cdf(k, n, params.theta1) <= params.beta) {
      return make_design(n, k, params, DesignMode::exact);
    }
  }
  throw SearchBoundError(
      fmt::format("no exact design with N <= {} meets alpha={} and beta={}", options.max_n,
                  params.alpha, params.beta));
}

ErrorPair normal_approx_errors(const TestDesign& design) {
  design.validate();
  const auto n = static_cast<double>(design.n_star);
  const double edge = static_cast<double>(design.k_star) + 0.5;
  auto standardized = [&](double theta) {
    return (edge - n * theta) / std::sqrt(n * theta * (1.0 - theta));
  };
  return {normal_cdf(-standardized(design.params.theta0)),
          normal_cdf(standardized(design.params.theta1))};
}

}  // namespace curtail
