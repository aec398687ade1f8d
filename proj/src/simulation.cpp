#include "curtail/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "curtail/characteristics.hpp"
#include "curtail/estimation.hpp"
#include "curtail/numeric.hpp"
#include "json.hpp"

namespace curtail {
namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

TrialOutcome run_trial(const MonitorState& fresh, double theta, double gamma, Xoshiro256& rng) {
  MonitorState state = fresh;
  while (advance(state, rng.bernoulli(theta)) == Decision::Continue) {
  }
  const PostTestEstimate est = estimate(state, gamma);
  TrialOutcome out;
  out.m_star = *state.m_star;
  out.s = state.s_n;
  out.rejected = state.status == TrialStatus::StoppedRejected;
  out.theta_hat = est.theta_hat;
  out.covered = est.interval->lower <= theta && theta <= est.interval->upper;
  return out;
}

std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t replication) {
  std::uint64_t state = master_seed;
  const std::uint64_t base = splitmix64(state);
  std::uint64_t mixed = base ^ (replication * 0xD1B54A32D192ED03ULL);
  return splitmix64(mixed);
}

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  std::uint64_t state = seed;
  for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Xoshiro256::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

void SimConfig::validate() const {
  design.validate();
  if (!(theta_true >= 0.0 && theta_true <= 1.0)) {
    throw DomainError(fmt::format("theta_true must lie in [0,1], got {}", theta_true));
  }
  if (replications < 1) {
    throw DomainError(fmt::format("replications must be >= 1, got {}", replications));
  }
  if (!(ci_gamma > 0.0 && ci_gamma < 1.0)) {
    throw DomainError(fmt::format("ci_gamma must lie in (0,1), got {}", ci_gamma));
  }
}

std::vector<TrialOutcome> simulate_trials(const SimConfig& config) {
  config.validate();
  const MonitorState fresh = monitor_new(config.design);
  const auto total = static_cast<std::size_t>(config.replications);
  std::vector<TrialOutcome> outcomes(total);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      Xoshiro256 rng(replication_seed(config.seed, r));
      outcomes[r] = run_trial(fresh, config.theta_true, config.ci_gamma, rng);
    }
  };

  unsigned workers = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::min<std::size_t>(total, 64)));
  if (workers == 1) {
    run_range(0, total);
    return outcomes;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (total + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(total, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(run_range, begin, end);
  }
  pool.clear();  // joins
  return outcomes;
}

SimReport summarize(std::span<const TrialOutcome> outcomes, double theta_true) {
  if (outcomes.empty()) throw DomainError("cannot summarize an empty simulation");
  CompensatedSum rejected;
  CompensatedSum covered;
  CompensatedSum m_sum;
  CompensatedSum theta_sum;
  for (const auto& o : outcomes) {
    rejected.add(o.rejected ? 1.0 : 0.0);
    covered.add(o.covered ? 1.0 : 0.0);
    m_sum.add(static_cast<double>(o.m_star));
    theta_sum.add(o.theta_hat);
  }
  const auto count = static_cast<double>(outcomes.size());
  SimReport rep;
  rep.replications = static_cast<Count>(outcomes.size());
  rep.theta_true = theta_true;
  rep.reject_rate = rejected.value() / count;
  rep.coverage = covered.value() / count;
  rep.mean_m_star = m_sum.value() / count;
  rep.mean_theta_hat = theta_sum.value() / count;
  CompensatedSum squares;
  for (const auto& o : outcomes) {
    const double d = static_cast<double>(o.m_star) - rep.mean_m_star;
    squares.add(d * d);
  }
  rep.sd_m_star = outcomes.size() > 1 ? std::sqrt(squares.value() / (count - 1.0)) : 0.0;
  rep.se_reject_rate = std::sqrt(rep.reject_rate * (1.0 - rep.reject_rate) / count);
  rep.se_coverage = std::sqrt(rep.coverage * (1.0 - rep.coverage) / count);
  rep.se_mean_m_star = rep.sd_m_star / std::sqrt(count);
  return rep;
}

SimReport simulate(const SimConfig& config) {
  const auto outcomes = simulate_trials(config);
  return summarize(outcomes, config.theta_true);
}

EmpiricalOc empirical_oc(const SimConfig& config) {
  if (!(config.theta_true > 0.0 && config.theta_true < 1.0)) {
    throw DomainError("empirical_oc needs theta_true strictly inside (0,1)");
  }
  EmpiricalOc out;
  out.report = simulate(config);
  out.exact_power = power(config.design, config.theta_true);
  out.exact_asn = asn(config.design, config.theta_true);
  const auto reps = static_cast<double>(config.replications);
  // Standard errors from the exact law so a degenerate sample (rate 0 or 1)
  // still yields a usable scale.
  const double se_power = std::sqrt(out.exact_power * (1.0 - out.exact_power) / reps);
  const double se_asn = m_moments(config.design, config.theta_true).sd() / std::sqrt(reps);
  auto z = [](double diff, double se) {
    if (se > 0.0) return diff / se;
    return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
  };
  out.z_reject = z(out.report.reject_rate - out.exact_power, se_power);
  out.z_asn = z(out.report.mean_m_star - out.exact_asn, se_asn);
  out.consistent = std::fabs(out.z_reject) <= 3.0 && std::fabs(out.z_asn) <= 3.0;
  return out;
}

double standardized_sup_distance(std::span<const TrialOutcome> outcomes, double theta) {
  if (outcomes.empty()) throw DomainError("no outcomes");
  if (!(theta > 0.0 && theta < 1.0)) {
    throw DomainError(fmt::format("theta must lie strictly inside (0,1), got {}", theta));
  }
  const double scale = std::sqrt(theta * (1.0 - theta));
  std::vector<double> u;
  u.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    u.push_back(std::sqrt(static_cast<double>(o.m_star)) * (o.theta_hat - theta) / scale);
  }
  std::sort(u.begin(), u.end());
  const auto count = static_cast<double>(u.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double phi = normal_cdf(u[i]);
    sup = std::max({sup, std::fabs(static_cast<double>(i + 1) / count - phi),
                    std::fabs(static_cast<double>(i) / count - phi)});
  }
  return sup;
}

std::vector<SavingsRow> savings_curve_data(std::span<const TestDesign> designs, double theta0,
                                           std::span<const double> theta_grid) {
  std::vector<SavingsRow> rows;
  rows.reserve(designs.size() * theta_grid.size());
  for (const auto& design : designs) {
    for (double theta : theta_grid) {
      SavingsRow row;
      row.delta = design.delta;
      row.n_star = design.n_star;
      row.k_star = design.k_star;
      row.theta = theta;
      row.exact = relative_savings(design, theta);
      row.limit = savings_limit(theta0, theta);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string savings_csv(std::span<const SavingsRow> rows) {
  std::string out = "delta,n_star,k_star,theta,rel_savings,limit\n";
  for (const auto& row : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", fmt_optional(row.delta), row.n_star, row.k_star,
                       row.theta, row.exact, row.limit);
  }
  return out;
}

std::string report_json(const SimReport& r) {
  nlohmann::json j;
  j["replications"] = r.replications;
  j["theta_true"] = r.theta_true;
  j["reject_rate"] = r.reject_rate;
  j["mean_m_star"] = r.mean_m_star;
  j["sd_m_star"] = r.sd_m_star;
  j["coverage"] = r.coverage;
  j["mean_theta_hat"] = r.mean_theta_hat;
  j["mc_standard_errors"] = {{"reject_rate", r.se_reject_rate},
                             {"mean_m_star", r.se_mean_m_star},
                             {"coverage", r.se_coverage}};
  return j.dump(2);
}

std::string report_table(const SimReport& r) {
  std::string out;
  out += fmt::format("{:<16}{:>14}{:>14}\n", "quantity", "estimate", "mc s.e.");
  out += fmt::format("{:<16}{:>14.6f}{:>14.6f}\n", "reject_rate", r.reject_rate, r.se_reject_rate);
  out += fmt::format("{:<16}{:>14.2f}{:>14.2f}\n", "mean_m_star", r.mean_m_star, r.se_mean_m_star);
  out += fmt::format("{:<16}{:>14.2f}{:>14}\n", "sd_m_star", r.sd_m_star, "");
  out += fmt::format("{:<16}{:>14.6f}{:>14.6f}\n", "coverage", r.coverage, r.se_coverage);
  out += fmt::format("{:<16}{:>14.6f}{:>14}\n", "mean_theta_hat", r.mean_theta_hat, "");
  out += fmt::format("replications={} theta_true={}\n", r.replications, r.theta_true);
  return out;
}

}  // namespace curtail
