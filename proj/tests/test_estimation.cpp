#include <cmath>

#include "curtail/design.hpp"
#include "curtail/estimation.hpp"
#include "curtail/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace curtail;

namespace {

TestDesign small(Count n, Count k) { return make_design(n, k, {0.05, 0.1, 0.1, 0.4}); }

MonitorState run(const TestDesign& d, std::initializer_list<int> outcomes) {
  MonitorState s = monitor_new(d);
  for (int o : outcomes) {
    if (advance(s, o == 1) != Decision::Continue) break;
  }
  return s;
}

// Long-double summation over every terminal state.
std::pair<long double, long double> summed_moments(Count n, Count k, long double p) {
  long double m1 = 0;
  long double m2 = 0;
  for (Count s = 0; s <= k; ++s) {
    const long double w = oracle::binom_pmf(s, n, p);
    const long double e = static_cast<long double>(s) / n;
    m1 += w * e;
    m2 += w * e * e;
  }
  for (Count m = k + 1; m <= n; ++m) {
    const long double w = oracle::negbin_pmf(m, k + 1, p);
    const long double e = static_cast<long double>(k + 1) / m;
    m1 += w * e;
    m2 += w * e * e;
  }
  return {m1, m2};
}

}  // namespace

TEST_CASE("point estimate on both terminal branches") {
  const MonitorState rejected = run(small(10, 2), {1, 0, 1, 1});
  CHECK(point_estimate(rejected).theta_hat == doctest::Approx(0.75));
  CHECK(point_estimate(rejected).m_star == 4);
  const MonitorState completed = run(small(10, 2), {0, 0, 1, 0, 0, 0, 0, 0, 0, 0});
  CHECK(point_estimate(completed).theta_hat == doctest::Approx(0.1));
  CHECK_THROWS_AS(point_estimate(run(small(10, 2), {0, 1})), NonTerminalError);
}

TEST_CASE("Wald interval") {
  const PostTestEstimate e = confidence_interval(53.0 / 19821.0, 19821, 0.05);
  REQUIRE(e.interval.has_value());
  CHECK(std::fabs(e.interval->lower - 0.001955) < 1e-6);
  CHECK(std::fabs(e.interval->upper - 0.003393) < 1e-6);
  CHECK(e.interval->level == doctest::Approx(0.95));
  CHECK_FALSE(e.interval->degenerate);

  const PostTestEstimate zero = confidence_interval(0.0, 500, 0.05);
  CHECK(zero.interval->degenerate);
  CHECK(zero.interval->lower == 0.0);
  CHECK(zero.interval->upper == 0.0);

  const PostTestEstimate wide = confidence_interval(0.9, 3, 0.05);
  CHECK(wide.interval->upper == 1.0);
  CHECK_THROWS_AS(confidence_interval(0.5, 0, 0.05), DomainError);
  CHECK_THROWS_AS(confidence_interval(0.5, 10, 1.0), DomainError);
}

TEST_CASE("estimator moments against path enumeration") {
  for (int n : {1, 2, 3, 8, 14, 20}) {
    for (int k : {0, 1, 2, 5, 13}) {
      if (k >= n) continue;
      for (double p : {0.05, 0.35, 0.8}) {
        CAPTURE(n);
        CAPTURE(k);
        CAPTURE(p);
        const auto e = oracle::enumerate_paths(n, k, p);
        const EstimatorMoments m = estimator_moments(small(n, k), p);
        CHECK(std::fabs(m.mean - static_cast<double>(e.est1)) < 1e-10);
        CHECK(std::fabs(m.second_moment - static_cast<double>(e.est2)) < 1e-10);
      }
    }
  }
}

TEST_CASE("estimator moments on the reference design against direct summation") {
  const TestDesign d = design_local({0.05, 0.1, 0.065, 0.1});
  for (double p : {0.065, 0.0715, 0.1, 0.3, 0.5}) {
    CAPTURE(p);
    const auto [m1, m2] = summed_moments(d.n_star, d.k_star, p);
    const EstimatorMoments m = estimator_moments(d, p);
    CHECK(m.mean == doctest::Approx(static_cast<double>(m1)).epsilon(1e-11));
    CHECK(m.second_moment == doctest::Approx(static_cast<double>(m2)).epsilon(1e-11));
    CHECK(m.variance ==
          doctest::Approx(static_cast<double>(m2 - m1 * m1)).epsilon(1e-6));
  }
}

TEST_CASE("published estimator moments away from the null") {
  const TestDesign d = design_approx({0.05, 0.1, 0.065, 0.0715});
  struct Row {
    double theta, mean, var;
  };
  for (const Row r : {Row{0.1, 0.1001, 1.0279e-05}, Row{0.2, 0.2002, 3.6521e-05},
                      Row{0.3, 0.3002, 7.1852e-05}, Row{0.4, 0.4003, 1.0941e-04},
                      Row{0.5, 0.5003, 1.4237e-04}}) {
    CAPTURE(r.theta);
    const EstimatorMoments m = estimator_moments(d, r.theta);
    CHECK(std::fabs(m.mean - r.mean) <= 5e-5);
    // two significant figures
    const double half = 0.5 * std::pow(10.0, std::floor(std::log10(r.var)) - 1);
    CHECK(std::fabs(m.variance - r.var) <= half);
  }
}

TEST_CASE("moments approach their small-delta limits") {
  double prev_bias = 1.0;
  double prev_var = 1.0;
  for (double delta : {0.1, 0.05, 0.01}) {
    const TestDesign d = design_local({0.05, 0.1, 0.065, delta});
    const EstimatorMoments m = estimator_moments(d, 0.2);
    const MomentLimits lim = moments_limit_check(0.2);
    const double bias = std::fabs(m.mean - lim.mean);
    CHECK(bias < prev_bias);
    CHECK(m.variance < prev_var);
    prev_bias = bias;
    prev_var = m.variance;
  }
  CHECK_THROWS_AS(moments_limit_check(1.0), DomainError);
}

TEST_CASE("estimate wraps point and interval") {
  const MonitorState s = run(small(10, 2), {0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  const PostTestEstimate e = estimate(s, 0.05);
  CHECK(e.theta_hat == 0.0);
  CHECK(e.interval->degenerate);
}
