#pragma once
// Seeded Monte Carlo over complete trials.
//
// Replication r draws from its own generator seeded by a pure function of
// (master seed, r), and results are reduced in replication order, so output
// does not depend on the number of worker threads.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curtail/design.hpp"

namespace curtail {

// xoshiro256** (period 2^256 - 1).
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform draw from the top 53 bits compared against theta; always true at
  /// theta = 1 and always false at theta = 0.
  bool bernoulli(double theta) {
    return static_cast<double>(next() >> 11) * 0x1.0p-53 < theta;
  }

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t replication);

struct SimConfig {
  TestDesign design;
  double theta_true = 0.0;
  Count replications = 1;
  std::uint64_t seed = 0;
  double ci_gamma = 0.05;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct TrialOutcome {
  Count m_star = 0;
  Count s = 0;
  bool rejected = false;
  double theta_hat = 0.0;
  bool covered = false;
};

struct SimReport {
  Count replications = 0;
  double theta_true = 0.0;
  double reject_rate = 0.0;
  double mean_m_star = 0.0;
  double sd_m_star = 0.0;
  double coverage = 0.0;
  double mean_theta_hat = 0.0;
  // Monte Carlo standard errors.
  double se_reject_rate = 0.0;
  double se_mean_m_star = 0.0;
  double se_coverage = 0.0;
};

/// Runs every replication to termination through a fresh monitor.
std::vector<TrialOutcome> simulate_trials(const SimConfig& config);
SimReport summarize(std::span<const TrialOutcome> outcomes, double theta_true);
SimReport simulate(const SimConfig& config);

struct EmpiricalOc {
  SimReport report;
  double exact_power = 0.0;
  double exact_asn = 0.0;
  double z_reject = 0.0;  // (empirical - exact) / MC standard error
  double z_asn = 0.0;
  bool consistent = false;  // both |z| <= 3
};

EmpiricalOc empirical_oc(const SimConfig& config);

/// Kolmogorov distance between the empirical law of
/// sqrt(M*) (theta_hat - theta) / sqrt(theta (1 - theta)) and the standard normal.
double standardized_sup_distance(std::span<const TrialOutcome> outcomes, double theta);

struct SavingsRow {
  std::optional<double> delta;
  Count n_star = 0;
  Count k_star = 0;
  double theta = 0.0;
  double exact = 0.0;  // (N* - E M*) / N*
  double limit = 0.0;  // max(0, 1 - theta0 / theta)
};

std::vector<SavingsRow> savings_curve_data(std::span<const TestDesign> designs, double theta0,
                                           std::span<const double> theta_grid);

std::string savings_csv(std::span<const SavingsRow> rows);
std::string report_json(const SimReport& report);
std::string report_table(const SimReport& report);

}  // namespace curtail
