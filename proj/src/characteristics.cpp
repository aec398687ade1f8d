#include "curtail/characteristics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "curtail/error.hpp"

namespace curtail {
namespace {

constexpr double kVarianceTolerance = 1e-8;
constexpr double kGridEdge = 1e-9;

void require_interior(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw DomainError(fmt::format("theta must lie strictly inside (0,1), got {}", theta));
  }
}

// I_theta(k* + 1 + shift, N* - k*)
double shifted_tail(const TestDesign& design, double theta, int shift) {
  return reg_inc_beta(theta, {static_cast<double>(design.k_star + 1 + shift),
                              static_cast<double>(design.n_star - design.k_star)});
}

}  // namespace

double OperatingCharacteristics::sd() const { return std::sqrt(m_variance); }

double power(const TestDesign& design, double theta) {
  design.validate();
  require_interior(theta);
  return binom_tail(design.k_star, design.n_star, theta);
}

double asn(const TestDesign& design, double theta) {
  design.validate();
  require_interior(theta);
  const auto n = static_cast<double>(design.n_star);
  const auto r = static_cast<double>(design.k_star + 1);
  return n * binom_cdf(design.k_star, design.n_star, theta) +
         r / theta * shifted_tail(design, theta, 1);
}

double relative_savings(const TestDesign& design, double theta) {
  design.validate();
  require_interior(theta);
  const auto n = static_cast<double>(design.n_star);
  const auto r = static_cast<double>(design.k_star + 1);
  const double saved = n * shifted_tail(design, theta, 0) - r / theta * shifted_tail(design, theta, 1);
  return std::max(0.0, saved) / n;
}

OperatingCharacteristics m_moments(const TestDesign& design, double theta) {
  design.validate();
  require_interior(theta);
  const auto n = static_cast<double>(design.n_star);
  const auto r = static_cast<double>(design.k_star + 1);
  const double not_rejected = binom_cdf(design.k_star, design.n_star, theta);
  const double tail1 = shifted_tail(design, theta, 1);
  const double tail2 = shifted_tail(design, theta, 2);

  OperatingCharacteristics oc;
  oc.theta = theta;
  oc.power = binom_tail(design.k_star, design.n_star, theta);
  oc.asn = n * not_rejected + r / theta * tail1;
  oc.m_second_moment =
      n * n * not_rejected + r * (r + 1.0) / (theta * theta) * tail2 - r / theta * tail1;
  double variance = oc.m_second_moment - oc.asn * oc.asn;
  if (variance < 0.0) {
    if (variance < -kVarianceTolerance * oc.m_second_moment) {
      throw Error(fmt::format("negative stopping-time variance {} at theta={}", variance, theta));
    }
    variance = 0.0;
    oc.variance_clamped = true;
  }
  oc.m_variance = variance;
  oc.cv = std::sqrt(variance) / oc.asn;
  oc.relative_savings = relative_savings(design, theta);
  return oc;
}

double savings_limit(double theta0, double theta) {
  require_interior(theta0);
  require_interior(theta);
  return std::max(0.0, 1.0 - theta0 / theta);
}

double power_limit(double theta0, double theta, double alpha) {
  require_interior(theta0);
  require_interior(theta);
  if (theta < theta0) return 0.0;
  if (theta > theta0) return 1.0;
  return alpha;
}

std::vector<OperatingCharacteristics> oc_curve(const TestDesign& design,
                                               std::span<const double> theta_grid) {
  std::vector<OperatingCharacteristics> out;
  out.reserve(theta_grid.size());
  for (double theta : theta_grid) out.push_back(m_moments(design, theta));
  return out;
}

std::vector<double> theta_grid(double lo, double hi, int points) {
  if (points < 1 || !(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw DomainError(fmt::format("bad theta grid [{}, {}] with {} points", lo, hi, points));
  }
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    grid.push_back(std::clamp(t, kGridEdge, 1.0 - kGridEdge));
  }
  return grid;
}

}  // namespace curtail
