#pragma once
// Closed-form operating characteristics of the curtailed test. M* denotes the
// terminal sample size min(M, N*), M the index of the (k*+1)-th side effect.

#include <span>
#include <vector>

#include "curtail/design.hpp"

namespace curtail {

struct OperatingCharacteristics {
  double theta = 0.0;
  double power = 0.0;
  double asn = 0.0;             // E(M*)
  double m_second_moment = 0.0; // E(M*^2)
  double m_variance = 0.0;      // clamped at 0
  double cv = 0.0;              // sd(M*) / E(M*)
  double relative_savings = 0.0;
  bool variance_clamped = false;

  double sd() const;
};

double power(const TestDesign& design, double theta);
double asn(const TestDesign& design, double theta);
OperatingCharacteristics m_moments(const TestDesign& design, double theta);
/// (N* - E(M*)) / N*
double relative_savings(const TestDesign& design, double theta);

/// Small-delta limit of the relative savings, max(0, 1 - theta0 / theta).
double savings_limit(double theta0, double theta);
/// Small-delta limit of the power curve: 0 below theta0, alpha at it, 1 above.
double power_limit(double theta0, double theta, double alpha);

std::vector<OperatingCharacteristics> oc_curve(const TestDesign& design,
                                               std::span<const double> theta_grid);

/// Evenly spaced grid over [lo, hi], clipped to [1e-9, 1 - 1e-9].
std::vector<double> theta_grid(double lo, double hi, int points);

}  // namespace curtail
