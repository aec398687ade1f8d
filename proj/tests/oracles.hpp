#pragma once
// Independent reference computations for the tests: plain long-double sums
// and exhaustive path enumeration. Nothing here calls into the library.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace oracle {

inline long double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<long double>(n) + 1) - std::lgamma(static_cast<long double>(k) + 1) -
         std::lgamma(static_cast<long double>(n - k) + 1);
}

inline long double binom_pmf(std::int64_t k, std::int64_t n, long double p) {
  if (k < 0 || k > n) return 0;
  return std::exp(log_choose(n, k) + k * std::log(p) + (n - k) * std::log1p(-p));
}

// P(S_n > k) by direct summation.
inline long double binom_tail(std::int64_t k, std::int64_t n, long double p) {
  long double s = 0;
  for (std::int64_t j = k + 1; j <= n; ++j) s += binom_pmf(j, n, p);
  return s;
}

inline long double binom_cdf(std::int64_t k, std::int64_t n, long double p) {
  long double s = 0;
  for (std::int64_t j = 0; j <= std::min(k, n); ++j) s += binom_pmf(j, n, p);
  return s;
}

// P(M = m) where M is the trial index of the r-th success.
inline long double negbin_pmf(std::int64_t m, std::int64_t r, long double p) {
  if (m < r) return 0;
  return std::exp(log_choose(m - 1, r - 1) + r * std::log(p) + (m - r) * std::log1p(-p));
}

struct Enumerated {
  long double power = 0;  // P(reject)
  long double m1 = 0;     // E M*
  long double m2 = 0;     // E M*^2
  long double est1 = 0;   // E theta_hat
  long double est2 = 0;   // E theta_hat^2
};

// Walks all 2^n outcome sequences of length n; each is weighted by its full
// probability, which sums correctly over the suffixes after a stop.
inline Enumerated enumerate_paths(int n, int k, long double p) {
  std::vector<long double> weight(n + 1);
  for (int s = 0; s <= n; ++s) weight[s] = std::pow(p, s) * std::pow(1 - p, n - s);
  Enumerated e;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const long double w = weight[__builtin_popcountll(mask)];
    int s = 0;
    int m = n;
    bool rejected = false;
    for (int i = 0; i < n; ++i) {
      s += static_cast<int>((mask >> i) & 1U);
      if (s == k + 1) {
        m = i + 1;
        rejected = true;
        break;
      }
    }
    const long double est =
        rejected ? static_cast<long double>(k + 1) / m : static_cast<long double>(s) / n;
    if (rejected) e.power += w;
    e.m1 += w * m;
    e.m2 += w * m * static_cast<long double>(m);
    e.est1 += w * est;
    e.est2 += w * est * est;
  }
  return e;
}

// Smallest N, then smallest k, with both exact error constraints met.
inline std::pair<std::int64_t, std::int64_t> brute_force_design(long double alpha, long double beta,
                                                                long double t0, long double t1,
                                                                std::int64_t n_max) {
  for (std::int64_t n = 1; n <= n_max; ++n) {
    for (std::int64_t k = 0; k < n; ++k) {
      if (binom_tail(k, n, t0) <= alpha && binom_cdf(k, n, t1) <= beta) return {n, k};
    }
  }
  return {-1, -1};
}

// Exact probability that the Wald interval covers p, summed over every
// terminal state of the curtailed trial.
inline long double exact_coverage(std::int64_t n, std::int64_t k, long double p, long double z) {
  auto covers = [&](long double est, std::int64_t m) {
    const long double half = z * std::sqrt(est * (1 - est) / m);
    return est - half <= p && p <= est + half;
  };
  long double c = 0;
  for (std::int64_t s = 0; s <= k; ++s) {
    if (covers(static_cast<long double>(s) / n, n)) c += binom_pmf(s, n, p);
  }
  for (std::int64_t m = k + 1; m <= n; ++m) {
    if (covers(static_cast<long double>(k + 1) / m, m)) c += negbin_pmf(m, k + 1, p);
  }
  return c;
}

}  // namespace oracle
