#include <cmath>
#include <random>

#include "curtail/characteristics.hpp"
#include "curtail/design.hpp"
#include "curtail/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace curtail;

namespace {

TestDesign small(Count n, Count k) { return make_design(n, k, {0.05, 0.1, 0.1, 0.4}); }

TestDesign table1_design() { return design_approx({0.05, 0.1, 0.065, 0.0715}); }

}  // namespace

TEST_CASE("power, ASN and second moment against path enumeration") {
  for (int n : {1, 2, 5, 10, 16}) {
    for (int k = 0; k < n; k += (n > 8 ? 3 : 1)) {
      for (double p : {0.05, 0.3, 0.5, 0.9}) {
        CAPTURE(n);
        CAPTURE(k);
        CAPTURE(p);
        const auto e = oracle::enumerate_paths(n, k, p);
        const OperatingCharacteristics oc = m_moments(small(n, k), p);
        CHECK(std::fabs(oc.power - static_cast<double>(e.power)) < 1e-12);
        CHECK(std::fabs(oc.asn - static_cast<double>(e.m1)) < 1e-10 * n);
        CHECK(std::fabs(oc.m_second_moment - static_cast<double>(e.m2)) < 1e-10 * n * n);
      }
    }
  }
}

TEST_CASE("curtailed power equals fixed-sample power") {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<Count> nd(2, 20000);
  std::uniform_real_distribution<double> pd(0.001, 0.999);
  for (int i = 0; i < 200; ++i) {
    const Count n = nd(gen);
    const Count k = std::uniform_int_distribution<Count>(0, n - 1)(gen);
    const double p = pd(gen);
    // P(M_k <= N) from the stopping-time law vs P(S_N > k).
    CHECK(std::fabs(negbin_cdf(n, k + 1, p) - power(small(n, k), p)) < 1e-12);
  }
}

TEST_CASE("published operating characteristics of the reference design") {
  const TestDesign d = table1_design();
  struct Row {
    double theta, asn, sd;
  };
  for (const Row r : {Row{0.065, 12802, 52.5240}, Row{0.0715, 12274, 363.9850},
                      Row{0.1, 8790, 281.2650}, Row{0.2, 4395, 132.5896}, Row{0.3, 2930, 82.6841},
                      Row{0.4, 2198, 57.4130}, Row{0.5, 1758, 41.9285}}) {
    CAPTURE(r.theta);
    const OperatingCharacteristics oc = m_moments(d, r.theta);
    CHECK(std::fabs(oc.asn - r.asn) <= 1.0);
    CHECK(oc.sd() == doctest::Approx(r.sd).epsilon(1e-3));
    CHECK(oc.cv == doctest::Approx(oc.sd() / oc.asn));
  }
}

TEST_CASE("moment properties on random designs") {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<Count> nd(1, 50000);
  std::uniform_real_distribution<double> pd(0.0005, 0.9995);
  for (int i = 0; i < 300; ++i) {
    const Count n = nd(gen);
    const Count k = std::uniform_int_distribution<Count>(0, n - 1)(gen);
    const double p = pd(gen);
    const OperatingCharacteristics oc = m_moments(small(n, k), p);
    CHECK(oc.asn >= static_cast<double>(k + 1) - 1e-9);
    CHECK(oc.asn <= static_cast<double>(n) + 1e-9);
    CHECK(oc.m_variance >= 0.0);
    CHECK(oc.power >= 0.0);
    CHECK(oc.power <= 1.0);
    CHECK(oc.relative_savings >= -1e-12);
    CHECK(oc.relative_savings == doctest::Approx(1.0 - oc.asn / static_cast<double>(n)).epsilon(1e-9));
  }
}

TEST_CASE("power is nondecreasing in theta") {
  const TestDesign d = table1_design();
  double prev = 0.0;
  for (double p : theta_grid(0.01, 0.2, 200)) {
    const double pw = power(d, p);
    CHECK(pw >= prev - 1e-15);
    prev = pw;
  }
}

TEST_CASE("savings and power limits") {
  CHECK(savings_limit(0.065, 0.065) == 0.0);
  CHECK(savings_limit(0.065, 0.05) == 0.0);
  CHECK(savings_limit(0.065, 0.2) == doctest::Approx(0.675));
  CHECK(power_limit(0.065, 0.05, 0.05) == 0.0);
  CHECK(power_limit(0.065, 0.065, 0.05) == 0.05);
  CHECK(power_limit(0.065, 0.07, 0.05) == 1.0);
  const TestDesign d = design_local({0.05, 0.1, 0.065, 0.1});
  // The finite-design gap is close to (k*/N* - theta0) / theta, which exceeds 0.02 at 0.1.
  const double excess = static_cast<double>(d.k_star) / static_cast<double>(d.n_star) - 0.065;
  for (double p : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    CAPTURE(p);
    const double gap = savings_limit(0.065, p) - relative_savings(d, p);
    if (p >= 0.2) CHECK(std::fabs(gap) < 0.02);
    CHECK(std::fabs(gap - excess / p) < 0.002);
  }
}

TEST_CASE("grid and domain checks") {
  const auto grid = theta_grid(0.0, 1.0, 5);
  REQUIRE(grid.size() == 5);
  CHECK(grid.front() > 0.0);
  CHECK(grid.back() < 1.0);
  CHECK_THROWS_AS(theta_grid(0.5, 0.1, 5), DomainError);
  CHECK_THROWS_AS(theta_grid(0.1, 0.5, 0), DomainError);
  CHECK_THROWS_AS(power(table1_design(), 0.0), DomainError);
  CHECK_THROWS_AS(asn(table1_design(), 1.0), DomainError);
  const auto curve = oc_curve(table1_design(), std::vector<double>{0.065});
  CHECK(curve.size() == 1);
}
