#include <cmath>
#include <random>

#include "curtail/design.hpp"
#include "curtail/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace curtail;

namespace {

DesignParams base(double theta1) { return {0.05, 0.1, 0.065, theta1}; }

}  // namespace

TEST_CASE("normal-approximation designs") {
  const TestDesign d = design_approx(base(0.0715));
  CHECK(d.n_star == 12811);
  CHECK(d.k_star == 878);
  CHECK(d.mode == DesignMode::approximate);
  CHECK(d.attained_alpha == doctest::Approx(0.05130593605357349).epsilon(1e-10));

  struct Row {
    double delta;
    Count n;
    Count k;
  };
  for (const Row row : {Row{0.5, 584, 47}, Row{0.25, 2162, 159}, Row{0.2, 3321, 239},
                        Row{0.1, 12811, 878}, Row{0.05, 50269, 3358}, Row{0.01, 1236886, 80848}}) {
    CAPTURE(row.delta);
    const TestDesign local = design_local({0.05, 0.1, 0.065, row.delta});
    CHECK(local.n_star == row.n);
    CHECK(local.k_star == row.k);
    REQUIRE(local.delta.has_value());
    CHECK(*local.delta == row.delta);
  }
}

TEST_CASE("delta form of the sample size equals the theta1 form") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> t0(0.001, 0.4);
  std::uniform_real_distribution<double> dl(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    const LocalDesignParams lp{0.05, 0.1, t0(gen), dl(gen)};
    const double a = local_sample_size(lp);
    const double b = approx_sample_size(lp.to_design_params());
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
  }
}

TEST_CASE("critical count and its inverse") {
  CHECK(k_for_n(19821, 0.005, 0.05) == 115);
  CHECK(k_for_n(12811, 0.065, 0.05) == 878);
  CHECK(n_for_k(52, 0.002, 0.05) == 20934);
  CHECK(k_for_n(20934, 0.002, 0.05) == 52);
  CHECK(k_for_n(20933, 0.002, 0.05) == 52);  // rounds up from 51.998

  // n_for_k returns the first N whose unrounded count reaches k.
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<Count> kd(1, 5000);
  std::uniform_real_distribution<double> td(0.001, 0.3);
  int solved = 0;
  for (int i = 0; i < 200; ++i) {
    const Count k = kd(gen);
    const double t = td(gen);
    try {
      const Count n = n_for_k(k, t, 0.05);
      CHECK(k_for_n(n, t, 0.05) == k);
      if (n > 1) CHECK(k_for_n(n - 1, t, 0.05) <= k);
      ++solved;
    } catch (const NoSolutionError&) {
    }
  }
  CHECK(solved > 150);
  CHECK_THROWS_AS(k_for_n(1, 0.5, 0.01), DegenerateDesignError);
  CHECK_THROWS_AS(k_for_n(0, 0.5, 0.05), DomainError);
  CHECK_THROWS_AS(n_for_k(-1, 0.5, 0.05), DomainError);
}

TEST_CASE("exact design agrees with brute force on small problems") {
  struct Case {
    double alpha, beta, t0, t1;
  };
  for (const Case c : {Case{0.1, 0.2, 0.1, 0.5}, Case{0.05, 0.1, 0.2, 0.6},
                       Case{0.05, 0.2, 0.3, 0.8}, Case{0.1, 0.1, 0.05, 0.4}}) {
    const auto [n, k] = oracle::brute_force_design(c.alpha, c.beta, c.t0, c.t1, 200);
    REQUIRE(n > 0);
    const TestDesign d = design_exact({c.alpha, c.beta, c.t0, c.t1});
    CHECK(d.n_star == n);
    CHECK(d.k_star == k);
    CHECK(d.mode == DesignMode::exact);
    CHECK(d.attained_alpha <= c.alpha);
    CHECK(d.attained_beta <= c.beta);
  }
}

TEST_CASE("exact design at the reference parameters meets both constraints") {
  const TestDesign d = design_exact(base(0.0715));
  CHECK(d.attained_alpha <= 0.05);
  CHECK(d.attained_beta <= 0.1);
  const TestDesign smaller = make_design(d.n_star - 1, d.k_star, base(0.0715));
  CHECK((smaller.attained_alpha > 0.05 || smaller.attained_beta > 0.1));
  CHECK_THROWS_AS(design_exact(base(0.0715), ExactSearchOptions{100}), SearchBoundError);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(design_approx({0.05, 0.1, 0.07, 0.065}), DomainError);
  CHECK_THROWS_AS(design_approx({0.0, 0.1, 0.065, 0.07}), DomainError);
  CHECK_THROWS_AS(design_approx({0.05, 1.0, 0.065, 0.07}), DomainError);
  CHECK_THROWS_AS(design_local({0.05, 0.1, 0.065, -0.1}), DomainError);
  CHECK_THROWS_AS(design_local({0.05, 0.1, 0.6, 1.0}), DomainError);  // theta1 = 1.2
  CHECK_THROWS_AS(make_design(10, 10, base(0.0715)), DegenerateDesignError);
  CHECK_THROWS_AS(make_design(0, 0, base(0.0715)), DegenerateDesignError);
}

TEST_CASE("normal approximation of the attained errors") {
  const TestDesign d1 = make_design(19821, 115, {0.05, 0.1, 0.005, 0.0065});
  const ErrorPair e1 = normal_approx_errors(d1);
  CHECK(e1.alpha == doctest::Approx(0.0494).epsilon(5e-4 / 0.0494));
  CHECK(e1.beta == doctest::Approx(0.1192).epsilon(5e-4 / 0.1192));
  const TestDesign d2 = make_design(20934, 52, {0.05, 0.1, 0.002, 0.003});
  const ErrorPair e2 = normal_approx_errors(d2);
  CHECK(std::fabs(e2.alpha - 0.0500) < 5e-4);
  CHECK(std::fabs(e2.beta - 0.0965) < 5e-4);
}

TEST_CASE("mode strings round-trip") {
  CHECK(design_mode_from_string(to_string(DesignMode::exact)) == DesignMode::exact);
  CHECK(design_mode_from_string(to_string(DesignMode::approximate)) == DesignMode::approximate);
  CHECK_THROWS_AS(design_mode_from_string("fast"), DomainError);
}
