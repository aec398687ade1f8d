#pragma once
// Choosing the maximal sample size N* and critical count k* of the test
// "reject once S_n reaches k*+1, give up at n = N*".

#include <optional>
#include <string>

#include "curtail/distributions.hpp"

namespace curtail {

enum class DesignMode { approximate, exact };

std::string to_string(DesignMode mode);
DesignMode design_mode_from_string(const std::string& text);

struct DesignParams {
  double alpha = 0.05;
  double beta = 0.1;
  double theta0 = 0.0;
  double theta1 = 0.0;

  void validate() const;
};

// Alternative written relative to the null, theta1 = theta0 (1 + delta).
struct LocalDesignParams {
  double alpha = 0.05;
  double beta = 0.1;
  double theta0 = 0.0;
  double delta = 0.0;

  void validate() const;
  DesignParams to_design_params() const;
};

struct TestDesign {
  Count n_star = 0;
  Count k_star = 0;
  double attained_alpha = 0.0;  // P_theta0(S_N* > k*)
  double attained_beta = 0.0;   // P_theta1(S_N* <= k*)
  DesignMode mode = DesignMode::approximate;
  DesignParams params;
  std::optional<double> delta;

  /// Structural checks only: 1 <= n_star, 0 <= k_star < n_star.
  void validate() const;
};

struct ExactSearchOptions {
  Count max_n = 10'000'000;
};

/// Unrounded normal-approximation sample size.
double approx_sample_size(const DesignParams& params);
/// The same quantity written in terms of delta; algebraically identical.
double local_sample_size(const LocalDesignParams& params);

/// Normal-approximation design: N* is the rounded sample-size formula, k* comes
/// from k_for_n at that N*. Attained errors are exact binomial probabilities.
TestDesign design_approx(const DesignParams& params);

/// Smallest N admitting a k with both exact error constraints met; the
/// smallest such k at that N.
TestDesign design_exact(const DesignParams& params, ExactSearchOptions options = {});

TestDesign design_local(const LocalDesignParams& params);

/// Critical count for a given maximal sample size:
/// round(n (z_{1-alpha} sqrt(theta0 (1-theta0) / n) + theta0) - 1/2).
Count k_for_n(Count n, double theta0, double alpha);

/// Inverse of k_for_n: the smallest N at which the unrounded critical-count
/// expression reaches k. Throws NoSolutionError when that N rounds to a
/// different count (k is skipped by the integer map).
Count n_for_k(Count k, double theta0, double alpha);

/// Assemble a design from a given (N*, k*) pair with exact attained errors.
TestDesign make_design(Count n_star, Count k_star, const DesignParams& params,
                       DesignMode mode = DesignMode::approximate);

struct ErrorPair {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Continuity-corrected normal approximation of the attained error
/// probabilities; the exact values live on TestDesign.
ErrorPair normal_approx_errors(const TestDesign& design);

}  // namespace curtail
