#pragma once
// Special functions and the two discrete laws the curtailed test lives on.
//
// Every probability below ~1e-300 is flushed to exactly 0.0. Such values only
// arise in extreme tails (e.g. 0.065^879) and never influence a decision.

#include <cstdint>
#include <vector>

namespace curtail {

using Count = std::int64_t;

inline constexpr double kUnderflowFloor = 1e-300;

struct BetaShape {
  double a = 1.0;
  double b = 1.0;

  void validate() const;
};

/// Lower and upper regularized incomplete beta, I_x(a,b) and 1 - I_x(a,b).
/// Both sides are computed directly so neither loses precision to cancellation.
struct BetaSplit {
  double lower = 0.0;
  double upper = 1.0;
};

/// Lanczos log-gamma for x > 0.
double log_gamma(double x);

/// log(Gamma(x)) - log(sqrt(2 pi) x^(x - 1/2) e^-x): the Stirling remainder.
double stirling_error(double x);

/// x log(x / m) + m - x, evaluated without cancellation when x is close to m.
double deviance_term(double x, double m);

/// Continued-fraction evaluation with the usual a/(a+b) symmetry switch.
/// Throws ConvergenceError after 500 iterations without reaching 1e-13.
BetaSplit reg_inc_beta_split(double x, BetaShape shape);
double reg_inc_beta(double x, BetaShape shape);

double binom_pmf(Count j, Count n, double theta);
/// Natural log of binom_pmf; stays finite where the pmf underflows. -inf on impossible outcomes.
double log_binom_pmf(Count j, Count n, double theta);
/// P(S_n > k) = I_theta(k+1, n-k). Zero when k == n.
double binom_tail(Count k, Count n, double theta);
/// P(S_n <= k). Accepts any integer k: 0 for k < 0, 1 for k >= n.
double binom_cdf(Count k, Count n, double theta);

/// Probability that the r-th success happens on trial j.
double negbin_pmf(Count j, Count r, double theta);
double log_negbin_pmf(Count j, Count r, double theta);
/// P(M <= n) for M the trial index of the r-th success.
double negbin_cdf(Count n, Count r, double theta);

/// negbin_pmf(j, r, theta) for j = first..last, anchored at the mode in log
/// space and extended outwards with the exact ratio recurrence. Linear time.
std::vector<double> negbin_pmf_range(Count r, double theta, Count first, Count last);

double normal_cdf(double x);
/// Inverse standard normal cdf, Wichura's AS 241 (about 1e-16 relative).
double normal_quantile(double p);

}  // namespace curtail
