#include <cmath>
#include <set>

#include "curtail/characteristics.hpp"
#include "curtail/design.hpp"
#include "curtail/simulation.hpp"
#include "curtail/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace curtail;

namespace {

constexpr long double kZ975 = 1.959963984540054L;

SimConfig config_for(const TestDesign& d, double theta, Count reps, std::uint64_t seed) {
  SimConfig c;
  c.design = d;
  c.theta_true = theta;
  c.replications = reps;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("generator basics") {
  Xoshiro256 a(1);
  Xoshiro256 b(1);
  Xoshiro256 c(2);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
  }
  Xoshiro256 g(5);
  int hits = 0;
  for (int i = 0; i < 200000; ++i) hits += g.bernoulli(0.3) ? 1 : 0;
  CHECK(std::fabs(hits / 200000.0 - 0.3) < 4.0 * std::sqrt(0.21 / 200000.0));
  for (int i = 0; i < 1000; ++i) {
    CHECK(g.bernoulli(1.0));
    CHECK_FALSE(g.bernoulli(0.0));
  }
  std::set<std::uint64_t> seeds;
  for (std::uint64_t r = 0; r < 1000; ++r) seeds.insert(replication_seed(42, r));
  CHECK(seeds.size() == 1000);
  CHECK(replication_seed(42, 7) == replication_seed(42, 7));
}

TEST_CASE("identical configuration gives identical bytes regardless of threads") {
  const TestDesign d = design_local({0.05, 0.1, 0.065, 0.2});
  SimConfig c = config_for(d, 0.08, 3000, 42);
  c.threads = 1;
  const std::string one = report_json(simulate(c));
  c.threads = 4;
  const std::string four = report_json(simulate(c));
  c.threads = 3;
  CHECK(one == four);
  CHECK(one == report_json(simulate(c)));
  c.seed = 43;
  CHECK(one != report_json(simulate(c)));
}

TEST_CASE("degenerate true probabilities") {
  const TestDesign d = make_design(50, 4, {0.05, 0.1, 0.1, 0.4});
  const auto all_hits = simulate_trials(config_for(d, 1.0, 200, 1));
  for (const auto& o : all_hits) {
    CHECK(o.rejected);
    CHECK(o.m_star == 5);
  }
  CHECK(simulate(config_for(d, 1.0, 200, 1)).reject_rate == 1.0);
  const SimReport none = simulate(config_for(d, 0.0, 200, 1));
  CHECK(none.reject_rate == 0.0);
  CHECK(none.mean_m_star == 50.0);
  CHECK(none.mean_theta_hat == 0.0);
}

TEST_CASE("empirical operating characteristics match enumeration") {
  const TestDesign d = make_design(10, 2, {0.05, 0.1, 0.1, 0.4});
  const auto e = oracle::enumerate_paths(10, 2, 0.3);
  const SimReport r = simulate(config_for(d, 0.3, 100000, 2024));
  const double power_se = std::sqrt(static_cast<double>(e.power * (1 - e.power)) / 1e5);
  const double m_sd = std::sqrt(static_cast<double>(e.m2 - e.m1 * e.m1));
  CHECK(std::fabs(r.reject_rate - static_cast<double>(e.power)) <= 3 * power_se);
  CHECK(std::fabs(r.mean_m_star - static_cast<double>(e.m1)) <= 3 * m_sd / std::sqrt(1e5));
  CHECK(r.se_reject_rate == doctest::Approx(std::sqrt(r.reject_rate * (1 - r.reject_rate) / 1e5)));

  const EmpiricalOc oc = empirical_oc(config_for(d, 0.3, 100000, 2024));
  CHECK(oc.consistent);
  CHECK(oc.exact_power == doctest::Approx(static_cast<double>(e.power)).epsilon(1e-12));
}

TEST_CASE("empirical check on the reference design") {
  const TestDesign d = design_approx({0.05, 0.1, 0.065, 0.0715});
  for (double p : {0.065, 0.1}) {
    CAPTURE(p);
    const EmpiricalOc oc = empirical_oc(config_for(d, p, 20000, 11));
    CHECK(oc.consistent);
  }
}

TEST_CASE("simulated coverage agrees with exact coverage") {
  const TestDesign d = design_local({0.05, 0.1, 0.065, 0.2});
  for (double p : {0.05, 0.2}) {
    CAPTURE(p);
    const auto exact =
        static_cast<double>(oracle::exact_coverage(d.n_star, d.k_star, p, kZ975));
    const SimReport r = simulate(config_for(d, p, 10000, 77));
    CHECK(std::fabs(r.coverage - exact) <= 3.0 * std::sqrt(exact * (1 - exact) / 1e4));
    CHECK(r.coverage >= 0.93);
    CHECK(r.coverage <= 0.97);
  }
}

TEST_CASE("sup distance") {
  std::vector<TrialOutcome> one{{100, 10, false, 0.1, true}};
  CHECK(standardized_sup_distance(one, 0.1) == doctest::Approx(0.5));
  std::vector<TrialOutcome> none;
  CHECK_THROWS_AS(standardized_sup_distance(none, 0.1), DomainError);
  const TestDesign d = design_local({0.05, 0.1, 0.065, 0.1});
  const auto outcomes = simulate_trials(config_for(d, 0.2, 10000, 5));
  CHECK(standardized_sup_distance(outcomes, 0.2) < 0.02);
}

TEST_CASE("savings curve data") {
  std::vector<TestDesign> ladder;
  for (double delta : {0.5, 0.25, 0.1}) ladder.push_back(design_local({0.05, 0.1, 0.065, delta}));
  const std::vector<double> grid{0.065, 0.2, 0.4};
  const auto rows = savings_curve_data(ladder, 0.065, grid);
  REQUIRE(rows.size() == 9);
  for (const auto& row : rows) {
    if (row.theta == 0.065) CHECK(row.limit == 0.0);
  }
  CHECK(std::fabs(rows[7].exact - 0.675) < 0.02);
  const std::string csv = savings_csv(rows);
  CHECK(csv.rfind("delta,n_star,k_star,theta,rel_savings,limit\n", 0) == 0);
}

TEST_CASE("configuration validation") {
  const TestDesign d = make_design(10, 2, {0.05, 0.1, 0.1, 0.4});
  CHECK_THROWS_AS(simulate(config_for(d, 0.3, 0, 1)), DomainError);
  CHECK_THROWS_AS(simulate(config_for(d, 1.3, 10, 1)), DomainError);
  CHECK_THROWS_AS(empirical_oc(config_for(d, 1.0, 10, 1)), DomainError);
}
