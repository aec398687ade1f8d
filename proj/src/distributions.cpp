#include "curtail/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "curtail/error.hpp"

namespace curtail {
namespace {

constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // log(sqrt(2 pi))
constexpr double kLogTwoPi = 1.83787706640934548356;

constexpr int kMaxFractionIterations = 500;
constexpr double kFractionTolerance = 1e-13;
constexpr double kTiny = 1e-300;

double flush(double p) { return p < kUnderflowFloor ? 0.0 : p; }

double flushed_exp(double log_p) {
  static const double kLogFloor = std::log(kUnderflowFloor);
  return log_p < kLogFloor ? 0.0 : std::exp(log_p);
}

void require_probability(double theta, const char* what) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw DomainError(fmt::format("{} must lie in [0,1], got {}", what, theta));
  }
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxFractionIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double step = d * c;
    h *= step;
    if (std::fabs(step - 1.0) < kFractionTolerance) return h;
  }
  throw ConvergenceError(fmt::format(
      "incomplete beta continued fraction did not converge (x={}, a={}, b={})", x, a, b));
}

// log(x^a (1-x)^b / B(a,b)), written through Stirling remainders and
// deviance terms so that a, b ~ 1e6 keep full relative accuracy.
double log_beta_front(double a, double b, double x) {
  const double y = 1.0 - x;
  const double s = a + b;
  return 0.5 * std::log(a * b / s) - kLogSqrtTwoPi + stirling_error(s) - stirling_error(a) -
         stirling_error(b) - deviance_term(a, s * x) - deviance_term(b, s * y);
}

}  // namespace

void BetaShape::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError(fmt::format("beta shape must be positive, got a={}, b={}", a, b));
  }
}

double log_gamma(double x) {
  static constexpr std::array<double, 9> kLanczos = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  constexpr double kG = 7.0;
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(fmt::format("log_gamma requires x > 0, got {}", x));
  }
  if (x < 0.5) {
    // Reflection keeps the series in its accurate range.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double series = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) {
    series += kLanczos[i] / (z + static_cast<double>(i));
  }
  const double t = z + kG + 0.5;
  return kLogSqrtTwoPi + (z + 0.5) * std::log(t) - t + std::log(series);
}

double stirling_error(double x) {
  if (x <= 15.0) {
    return log_gamma(x) - (x - 0.5) * std::log(x) + x - kLogSqrtTwoPi;
  }
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  const double xx = x * x;
  if (x > 500.0) return (s0 - s1 / xx) / x;
  if (x > 80.0) return (s0 - (s1 - s2 / xx) / xx) / x;
  if (x > 35.0) return (s0 - (s1 - (s2 - s3 / xx) / xx) / xx) / x;
  return (s0 - (s1 - (s2 - (s3 - s4 / xx) / xx) / xx) / xx) / x;
}

double deviance_term(double x, double m) {
  if (x == 0.0) return m;
  if (std::fabs(x - m) < 0.1 * (x + m)) {
    double v = (x - m) / (x + m);
    double sum = (x - m) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double next = sum + ej / (2 * j + 1);
      if (next == sum) return next;
      sum = next;
    }
    return sum;
  }
  return x * std::log(x / m) + m - x;
}

BetaSplit reg_inc_beta_split(double x, BetaShape shape) {
  shape.validate();
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError(fmt::format("incomplete beta argument must lie in [0,1], got {}", x));
  }
  if (x == 0.0) return {0.0, 1.0};
  if (x == 1.0) return {1.0, 0.0};
  const double a = shape.a;
  const double b = shape.b;
  const double front = std::exp(log_beta_front(a, b, x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double lower = front * beta_fraction(a, b, x) / a;
    return {flush(lower), flush(1.0 - lower)};
  }
  const double upper = front * beta_fraction(b, a, 1.0 - x) / b;
  return {flush(1.0 - upper), flush(upper)};
}

double reg_inc_beta(double x, BetaShape shape) { return reg_inc_beta_split(x, shape).lower; }

double log_binom_pmf(Count j, Count n, double theta) {
  require_probability(theta, "theta");
  if (n < 0 || j < 0 || j > n) {
    throw DomainError(fmt::format("binom_pmf requires 0 <= j <= n, got j={}, n={}", j, n));
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const double q = 1.0 - theta;
  if (theta == 0.0) return j == 0 ? 0.0 : kNegInf;
  if (q == 0.0) return j == n ? 0.0 : kNegInf;
  const auto nd = static_cast<double>(n);
  const auto jd = static_cast<double>(j);
  if (j == 0) {
    if (n == 0) return 0.0;
    return theta < 0.1 ? -deviance_term(nd, nd * q) - nd * theta : nd * std::log(q);
  }
  if (j == n) {
    return q < 0.1 ? -deviance_term(nd, nd * theta) - nd * q : nd * std::log(theta);
  }
  const double lc = stirling_error(nd) - stirling_error(jd) - stirling_error(nd - jd) -
                    deviance_term(jd, nd * theta) - deviance_term(nd - jd, nd * q);
  const double lf = kLogTwoPi + std::log(jd) + std::log1p(-jd / nd);
  return lc - 0.5 * lf;
}

double binom_pmf(Count j, Count n, double theta) {
  const double lp = log_binom_pmf(j, n, theta);
  return flushed_exp(lp);
}

double binom_tail(Count k, Count n, double theta) {
  require_probability(theta, "theta");
  if (k < 0 || k > n) {
    throw DomainError(fmt::format("binom_tail requires 0 <= k <= n, got k={}, n={}", k, n));
  }
  if (k == n || theta == 0.0) return 0.0;
  if (theta == 1.0) return 1.0;
  return reg_inc_beta_split(theta, {static_cast<double>(k + 1), static_cast<double>(n - k)}).lower;
}

double binom_cdf(Count k, Count n, double theta) {
  require_probability(theta, "theta");
  if (n < 0) throw DomainError(fmt::format("binom_cdf requires n >= 0, got {}", n));
  if (k < 0) return 0.0;
  if (k >= n || theta == 0.0) return 1.0;
  if (theta == 1.0) return 0.0;
  return reg_inc_beta_split(theta, {static_cast<double>(k + 1), static_cast<double>(n - k)}).upper;
}

double negbin_pmf(Count j, Count r, double theta) {
  if (r < 1 || j < r) {
    throw DomainError(fmt::format("negbin_pmf requires j >= r >= 1, got j={}, r={}", j, r));
  }
  // C(j-1, r-1) = (r/j) C(j, r)
  return flush(static_cast<double>(r) / static_cast<double>(j) * binom_pmf(r, j, theta));
}

double log_negbin_pmf(Count j, Count r, double theta) {
  if (r < 1 || j < r) {
    throw DomainError(fmt::format("negbin_pmf requires j >= r >= 1, got j={}, r={}", j, r));
  }
  return std::log(static_cast<double>(r) / static_cast<double>(j)) + log_binom_pmf(r, j, theta);
}

double negbin_cdf(Count n, Count r, double theta) {
  require_probability(theta, "theta");
  if (r < 1 || n < r) {
    throw DomainError(fmt::format("negbin_cdf requires n >= r >= 1, got n={}, r={}", n, r));
  }
  if (theta == 0.0) return 0.0;
  if (theta == 1.0) return 1.0;
  return reg_inc_beta_split(theta, {static_cast<double>(r), static_cast<double>(n - r + 1)}).lower;
}

std::vector<double> negbin_pmf_range(Count r, double theta, Count first, Count last) {
  require_probability(theta, "theta");
  if (r < 1 || first < r || last < first) {
    throw DomainError(fmt::format("negbin_pmf_range requires r <= first <= last, got r={}, [{}, {}]",
                                  r, first, last));
  }
  std::vector<double> pmf(static_cast<std::size_t>(last - first + 1), 0.0);
  if (theta == 0.0) return pmf;
  if (theta == 1.0) {
    if (first == r) pmf[0] = 1.0;
    return pmf;
  }
  // Periodic re-anchoring bounds the drift of the multiplicative recurrence.
  constexpr Count kAnchorStride = 256;
  const double q = 1.0 - theta;
  const auto mode_guess = static_cast<Count>(std::floor(static_cast<double>(r - 1) / theta)) + 1;
  const Count anchor = std::clamp(mode_guess, first, last);
  auto at = [&](Count j) -> double& { return pmf[static_cast<std::size_t>(j - first)]; };

  at(anchor) = negbin_pmf(anchor, r, theta);
  for (Count j = anchor + 1; j <= last; ++j) {
    if ((j - anchor) % kAnchorStride == 0) {
      at(j) = negbin_pmf(j, r, theta);
    } else {
      at(j) = flush(at(j - 1) * static_cast<double>(j - 1) * q / static_cast<double>(j - r));
    }
    if (at(j) == 0.0) break;  // beyond the mode terms only shrink
  }
  for (Count j = anchor - 1; j >= first; --j) {
    if ((anchor - j) % kAnchorStride == 0) {
      at(j) = negbin_pmf(j, r, theta);
    } else {
      at(j) = flush(at(j + 1) * static_cast<double>(j + 1 - r) / (static_cast<double>(j) * q));
    }
    if (at(j) == 0.0) break;
  }
  return pmf;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError(fmt::format("normal_quantile requires 0 < p < 1, got {}", p));
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        ((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
             6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
           1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
         1.3314166789178437745e+2) * r + 3.3871328727963666080e+0;
    const double den =
        ((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
             3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
           5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
         4.2313330701600911252e+1) * r + 1.0;
    return q * num / den;
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double value = 0.0;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
             2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
           3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
         4.63033784615654529590e+0) * r + 1.42343711074968357734e+0;
    const double den =
        ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
             1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
           6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
         2.05319162663775882187e+0) * r + 1.0;
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
             1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
           2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
         5.46378491116411436990e+0) * r + 6.65790464350110377720e+0;
    const double den =
        ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
             1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
           1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
         5.99832206555887937690e-1) * r + 1.0;
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

}  // namespace curtail
