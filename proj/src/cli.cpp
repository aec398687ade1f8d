#include "curtail/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "curtail/characteristics.hpp"
#include "curtail/design.hpp"
#include "curtail/estimation.hpp"
#include "curtail/monitor.hpp"
#include "curtail/reproduction.hpp"
#include "curtail/simulation.hpp"
#include "json.hpp"

namespace curtail {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thrown for flag combinations CLI11 cannot express; maps to exit 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Thrown for snapshot file I/O problems; maps to exit 9.
class SnapshotIoError : public Error {
 public:
  using Error::Error;
};

struct DesignFlags {
  double alpha = 0.05;
  double beta = 0.1;
  std::optional<double> theta0;
  std::optional<double> theta1;
  std::optional<double> delta;
  std::optional<Count> n_star;
  std::optional<Count> k_star;
  bool exact = false;
};

struct Flags {
  DesignFlags design;
  std::string format = "json";
  std::string config;

  // oc
  std::vector<double> thetas;
  std::optional<double> theta_min;
  std::optional<double> theta_max;
  int points = 50;
  bool moments = false;

  // monitor / estimate
  std::string state_path;
  std::string log_path;
  bool skip_applied = false;
  bool force = false;
  double gamma = 0.05;

  // simulate / repro
  double theta = 0.0;
  Count reps = 10'000;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  bool check_oc = false;
  bool sup_distance = false;
  std::string target;
  std::string out_dir;
};

void add_design_flags(CLI::App* app, DesignFlags& d) {
  app->add_option("--alpha", d.alpha, "Type I error bound")->capture_default_str();
  app->add_option("--beta", d.beta, "Type II error bound")->capture_default_str();
  app->add_option("--theta0", d.theta0, "Null side-effect probability")->required();
  auto* t1 = app->add_option("--theta1", d.theta1, "Alternative probability");
  auto* dl = app->add_option("--delta", d.delta, "Relative elevation, theta1 = theta0 (1 + delta)");
  t1->excludes(dl);
  app->add_option("--n-star", d.n_star, "Fix the maximal sample size");
  app->add_option("--k-star", d.k_star, "Fix the critical count");
  app->add_flag("--exact", d.exact, "Search for the smallest exact design");
}

void add_config_flag(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON file of option values for this subcommand");
}

TestDesign build_design(const DesignFlags& d) {
  if (!d.theta1 && !d.delta) throw UsageError("exactly one of --theta1 or --delta is required");
  DesignParams params;
  std::optional<double> delta;
  if (d.delta) {
    LocalDesignParams local{d.alpha, d.beta, *d.theta0, *d.delta};
    local.validate();
    params = local.to_design_params();
    delta = d.delta;
  } else {
    params = DesignParams{d.alpha, d.beta, *d.theta0, *d.theta1};
  }
  params.validate();
  TestDesign design;
  if (d.n_star && d.k_star) {
    design = make_design(*d.n_star, *d.k_star, params);
  } else if (d.n_star) {
    design = make_design(*d.n_star, k_for_n(*d.n_star, params.theta0, params.alpha), params);
  } else if (d.k_star) {
    design = make_design(n_for_k(*d.k_star, params.theta0, params.alpha), *d.k_star, params);
  } else if (d.exact) {
    design = design_exact(params);
  } else {
    design = design_approx(params);
  }
  if ((d.n_star || d.k_star) && d.exact) {
    throw UsageError("--exact cannot be combined with --n-star or --k-star");
  }
  if (delta) design.delta = delta;
  return design;
}

json design_json(const TestDesign& d) {
  json j;
  j["n_star"] = d.n_star;
  j["k_star"] = d.k_star;
  j["attained_alpha"] = d.attained_alpha;
  j["attained_beta"] = d.attained_beta;
  j["mode"] = to_string(d.mode);
  j["params"] = {{"alpha", d.params.alpha},
                 {"beta", d.params.beta},
                 {"theta0", d.params.theta0},
                 {"theta1", d.params.theta1}};
  j["delta"] = d.delta ? json(*d.delta) : json(nullptr);
  const ErrorPair approx = normal_approx_errors(d);
  j["normal_approx_alpha"] = approx.alpha;
  j["normal_approx_beta"] = approx.beta;
  return j;
}

std::string design_table(const TestDesign& d) {
  const ErrorPair approx = normal_approx_errors(d);
  std::string out;
  out += fmt::format("{:<22}{}\n", "N*", d.n_star);
  out += fmt::format("{:<22}{}\n", "k*", d.k_star);
  out += fmt::format("{:<22}{:.6f}\n", "attained alpha", d.attained_alpha);
  out += fmt::format("{:<22}{:.6f}\n", "attained beta", d.attained_beta);
  out += fmt::format("{:<22}{:.6f} / {:.6f}\n", "normal approx a/b", approx.alpha, approx.beta);
  out += fmt::format("{:<22}{}\n", "mode", to_string(d.mode));
  out += fmt::format("{:<22}{} -> {}\n", "theta0 -> theta1", d.params.theta0, d.params.theta1);
  return out;
}

std::vector<double> resolve_grid(const Flags& f) {
  std::vector<double> grid;
  if (!f.thetas.empty()) {
    grid = f.thetas;
  } else if (f.theta_min && f.theta_max) {
    if (!(*f.theta_min < *f.theta_max) || f.points < 2) {
      throw UsageError("grid needs theta-min < theta-max and at least 2 points");
    }
    grid = theta_grid(*f.theta_min, *f.theta_max, f.points);
  } else {
    throw UsageError("give --thetas or both --theta-min and --theta-max");
  }
  for (double t : grid) {
    if (!(t > 0.0 && t < 1.0)) {
      throw UsageError(fmt::format("grid value {} is not strictly inside (0,1)", t));
    }
  }
  return grid;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotIoError(fmt::format("cannot read '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

MonitorState load_state(const std::string& path) { return restore(read_file(path)); }

void save_state(const std::string& path, const MonitorState& state) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SnapshotIoError(fmt::format("cannot write '{}'", tmp.string()));
    out << persist(state) << '\n';
    if (!out.flush()) throw SnapshotIoError(fmt::format("cannot write '{}'", tmp.string()));
  }
  fs::rename(tmp, target);
}

json state_json(const MonitorState& s) {
  json j;
  j["n"] = s.n;
  j["s_n"] = s.s_n;
  j["status"] = to_string(s.status);
  j["decision"] = to_string(decision(s));
  j["m_star"] = s.m_star ? json(*s.m_star) : json(nullptr);
  j["design"] = design_json(s.design);
  return j;
}

int decision_exit(Decision d) {
  return d == Decision::RejectH0 ? exit_code::kReject : exit_code::kOk;
}

int cmd_design(const Flags& f, std::ostream& out) {
  const TestDesign d = build_design(f.design);
  out << (f.format == "json" ? design_json(d).dump(2) + "\n" : design_table(d));
  return exit_code::kOk;
}

int cmd_oc(const Flags& f, std::ostream& out) {
  const std::vector<double> grid = resolve_grid(f);
  const TestDesign d = build_design(f.design);
  out << "theta,power,asn,sd,cv,rel_savings";
  if (f.moments) out << ",est_mean,est_second_moment,est_variance";
  out << '\n';
  for (const auto& oc : oc_curve(d, grid)) {
    out << fmt::format("{},{},{},{},{},{}", oc.theta, oc.power, oc.asn, oc.sd(), oc.cv,
                       oc.relative_savings);
    if (f.moments) {
      const EstimatorMoments m = estimator_moments(d, oc.theta);
      out << fmt::format(",{},{},{}", m.mean, m.second_moment, m.variance);
    }
    out << '\n';
  }
  return exit_code::kOk;
}

int cmd_monitor_init(const Flags& f, std::ostream& out) {
  if (fs::exists(f.state_path) && !f.force) {
    throw UsageError(fmt::format("'{}' exists; pass --force to overwrite", f.state_path));
  }
  const MonitorState state = monitor_new(build_design(f.design));
  save_state(f.state_path, state);
  out << to_string(decision(state)) << '\n';
  out << fmt::format("N*={} k*={} snapshot={}\n", state.design.n_star, state.design.k_star,
                     f.state_path);
  return exit_code::kOk;
}

int cmd_monitor_observe(const Flags& f, std::ostream& out) {
  MonitorState state = load_state(f.state_path);
  std::vector<Observation> events;
  if (f.log_path == "-") {
    events = read_event_log(std::cin);
  } else {
    std::ifstream in(f.log_path);
    if (!in) throw UsageError(fmt::format("cannot read event log '{}'", f.log_path));
    events = read_event_log(in);
  }
  Count skipped = 0;
  if (f.skip_applied) {
    const Count applied = state.n;
    const auto first = std::partition_point(
        events.begin(), events.end(), [&](const Observation& o) { return o.sequence_no <= applied; });
    skipped = static_cast<Count>(first - events.begin());
    events.erase(events.begin(), first);
  }
  if (state.terminal() && events.empty()) {
    // Nothing new to apply; report the settled decision.
    out << to_string(decision(state)) << '\n';
    out << fmt::format("consumed=0 dropped=0 skipped={} n={} s_n={}\n", skipped, state.n,
                       state.s_n);
    return decision_exit(decision(state));
  }
  const ObserveReport report = observe(state, events);
  save_state(f.state_path, state);
  out << to_string(report.decision) << '\n';
  out << fmt::format("consumed={} dropped={} skipped={} n={} s_n={}\n", report.consumed,
                     report.dropped, skipped, state.n, state.s_n);
  return decision_exit(report.decision);
}

int cmd_monitor_status(const Flags& f, std::ostream& out) {
  const MonitorState state = load_state(f.state_path);
  if (f.format == "json") {
    out << state_json(state).dump(2) << '\n';
  } else {
    out << to_string(decision(state)) << '\n';
    out << fmt::format("status={} n={} s_n={} N*={} k*={}\n", to_string(state.status), state.n,
                       state.s_n, state.design.n_star, state.design.k_star);
  }
  return exit_code::kOk;
}

int cmd_estimate(const Flags& f, std::ostream& out) {
  const MonitorState state = load_state(f.state_path);
  if (!(f.gamma > 0.0 && f.gamma < 1.0)) throw UsageError("--gamma must lie in (0,1)");
  const PostTestEstimate est = estimate(state, f.gamma);
  const ConfidenceInterval& ci = *est.interval;
  if (f.format == "json") {
    json j;
    j["theta_hat"] = est.theta_hat;
    j["m_star"] = est.m_star;
    j["status"] = to_string(state.status);
    j["s"] = state.s_n;
    j["interval"] = {{"level", ci.level},
                     {"lower", ci.lower},
                     {"upper", ci.upper},
                     {"degenerate", ci.degenerate}};
    out << j.dump(2) << '\n';
  } else {
    out << fmt::format("theta_hat={:.6f} M*={} {:.0f}% CI [{:.6f}, {:.6f}]{}\n", est.theta_hat,
                       est.m_star, 100.0 * ci.level, ci.lower, ci.upper,
                       ci.degenerate ? " (degenerate)" : "");
  }
  return exit_code::kOk;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
  SimConfig config;
  config.design = build_design(f.design);
  config.theta_true = f.theta;
  config.replications = f.reps;
  config.seed = f.seed;
  config.ci_gamma = f.gamma;
  config.threads = f.threads;
  try {
    config.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  const auto outcomes = simulate_trials(config);
  const SimReport report = summarize(outcomes, config.theta_true);
  const bool interior = f.theta > 0.0 && f.theta < 1.0;
  if (f.format == "json") {
    json j = json::parse(report_json(report));
    j["design"] = {{"n_star", config.design.n_star}, {"k_star", config.design.k_star}};
    j["seed"] = f.seed;
    if (f.check_oc && interior) {
      const double exact_power = power(config.design, f.theta);
      const OperatingCharacteristics oc = m_moments(config.design, f.theta);
      j["exact"] = {{"power", exact_power}, {"asn", oc.asn}, {"sd_m_star", oc.sd()}};
    }
    if (f.sup_distance && interior) {
      j["sup_distance"] = standardized_sup_distance(outcomes, f.theta);
    }
    out << j.dump(2) << '\n';
  } else {
    out << report_table(report);
    if (f.check_oc && interior) {
      out << fmt::format("exact power={:.6f} exact asn={:.2f}\n", power(config.design, f.theta),
                         asn(config.design, f.theta));
    }
    if (f.sup_distance && interior) {
      out << fmt::format("sup distance to N(0,1)={:.5f}\n",
                         standardized_sup_distance(outcomes, f.theta));
    }
  }
  return exit_code::kOk;
}

int cmd_repro(const Flags& f, std::ostream& out) {
  if (!is_repro_target(f.target)) {
    throw UsageError(fmt::format("unknown --target '{}'", f.target));
  }
  if (f.reps < 1) throw UsageError("--reps must be >= 1");
  ReproOptions options;
  options.seed = f.seed;
  options.replications = f.reps;
  options.threads = f.threads;
  bool ok = true;
  for (const ReproReport& report : run_repro(f.target, options)) {
    out << format_repro(report);
    ok = ok && report.pass();
    if (!f.out_dir.empty()) {
      fs::create_directories(f.out_dir);
      for (const auto& [name, body] : report.artifacts) {
        std::ofstream file(fs::path(f.out_dir) / name, std::ios::binary | std::ios::trunc);
        file << body;
      }
    }
  }
  out << (ok ? "reproduction: PASS\n" : "reproduction: FAIL\n");
  return ok ? exit_code::kOk : exit_code::kReproFailed;
}

// --- --config support -------------------------------------------------------

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

CLI::App* selected_leaf(CLI::App& app, const std::vector<std::string>& args) {
  CLI::App* current = &app;
  for (const auto& token : args) {
    if (token.empty() || token[0] == '-') continue;
    for (CLI::App* sub : current->get_subcommands({})) {
      if (sub->check_name(token)) {
        current = sub;
        break;
      }
    }
  }
  return current;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::vector<std::string> config_tokens(const std::string& path, CLI::App* leaf,
                                       const std::vector<std::string>& args) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot read config '{}'", path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [raw_key, value] : doc.items()) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    const CLI::Option* opt = key == "config" ? nullptr : leaf->get_option_no_throw(flag);
    if (opt == nullptr) {
      throw UsageError(fmt::format("unknown config key '{}' for '{}'", raw_key, leaf->get_name()));
    }
    if (given_on_command_line(args, flag)) continue;  // the command line wins
    if (value.is_null()) continue;
    if (value.is_boolean()) {
      if (opt->get_expected_min() != 0) {
        throw UsageError(fmt::format("config key '{}' expects a value", raw_key));
      }
      if (value.get<bool>()) tokens.push_back(flag);
      continue;
    }
    if (opt->get_expected_min() == 0) {
      throw UsageError(fmt::format("config key '{}' is a switch and needs true/false", raw_key));
    }
    std::string text;
    if (value.is_array()) {
      for (const auto& item : value) {
        if (!item.is_number() && !item.is_string()) {
          throw UsageError(fmt::format("config key '{}' has a non-scalar element", raw_key));
        }
        if (!text.empty()) text += ',';
        text += item.is_string() ? item.get<std::string>() : item.dump();
      }
    } else if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_number()) {
      text = value.dump();
    } else {
      throw UsageError(fmt::format("config key '{}' has an unsupported value", raw_key));
    }
    tokens.push_back(flag);
    tokens.push_back(text);
  }
  return tokens;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Curtailed sequential testing for side-effect surveillance", "curtail"};
  app.require_subcommand(1);

  auto* design = app.add_subcommand("design", "Compute the optimal (N*, k*) pair");
  add_design_flags(design, f.design);
  design->add_option("--format", f.format)->check(CLI::IsMember({"json", "table"}));
  add_config_flag(design, f);

  auto* oc = app.add_subcommand("oc", "Operating characteristics over a theta grid as CSV");
  add_design_flags(oc, f.design);
  auto* thetas = oc->add_option("--thetas", f.thetas, "Comma-separated theta values")
                     ->delimiter(',');
  auto* tmin = oc->add_option("--theta-min", f.theta_min);
  oc->add_option("--theta-max", f.theta_max);
  oc->add_option("--points", f.points)->capture_default_str();
  thetas->excludes(tmin);
  oc->add_flag("--moments", f.moments, "Add estimator-moment columns");
  add_config_flag(oc, f);

  auto* monitor = app.add_subcommand("monitor", "Stream observations through a trial");
  monitor->require_subcommand(1);
  auto* init = monitor->add_subcommand("init", "Create a fresh trial snapshot");
  add_design_flags(init, f.design);
  init->add_option("--state", f.state_path, "Snapshot path")->required();
  init->add_flag("--force", f.force, "Overwrite an existing snapshot");
  add_config_flag(init, f);
  auto* obs = monitor->add_subcommand("observe", "Apply a JSONL event log");
  obs->add_option("--state", f.state_path, "Snapshot path")->required();
  obs->add_option("--log", f.log_path, "Event log (JSONL, '-' for stdin)")->required();
  obs->add_flag("--skip-applied", f.skip_applied, "Ignore events already in the snapshot");
  add_config_flag(obs, f);
  auto* status = monitor->add_subcommand("status", "Show the snapshot");
  status->add_option("--state", f.state_path, "Snapshot path")->required();
  status->add_option("--format", f.format)->check(CLI::IsMember({"json", "table"}));
  add_config_flag(status, f);

  auto* est = app.add_subcommand("estimate", "Post-test estimate and confidence interval");
  est->add_option("--state", f.state_path, "Snapshot of a terminated trial")->required();
  est->add_option("--gamma", f.gamma, "1 - confidence level")->capture_default_str();
  est->add_option("--format", f.format)->check(CLI::IsMember({"json", "table"}));
  add_config_flag(est, f);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study of complete trials");
  add_design_flags(sim, f.design);
  sim->add_option("--theta", f.theta, "True side-effect probability")->required();
  sim->add_option("--reps", f.reps)->capture_default_str();
  sim->add_option("--seed", f.seed)->capture_default_str();
  sim->add_option("--gamma", f.gamma)->capture_default_str();
  sim->add_option("--threads", f.threads, "0 uses every core")->capture_default_str();
  sim->add_flag("--check-oc", f.check_oc, "Report exact power and ASN alongside");
  sim->add_flag("--sup-distance", f.sup_distance, "Kolmogorov distance of standardized estimate");
  sim->add_option("--format", f.format)->check(CLI::IsMember({"json", "table"}));
  add_config_flag(sim, f);

  auto* repro = app.add_subcommand("repro", "Recompute published reference values");
  repro->add_option("--target", f.target,
                    "table1|table2|table3|table4|fig2|fig3|covid-example|all")
      ->required();
  repro->add_option("--seed", f.seed)->capture_default_str();
  repro->add_option("--reps", f.reps)->capture_default_str();
  repro->add_option("--threads", f.threads)->capture_default_str();
  repro->add_option("--out-dir", f.out_dir, "Write CSV artifacts here");
  add_config_flag(repro, f);

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

  try {
    if (const auto path = find_config_path(args)) {
      const auto extra = config_tokens(*path, selected_leaf(app, args), args);
      args.insert(args.end(), extra.begin(), extra.end());
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_code::kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return exit_code::kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kUsage;
  }

  try {
    if (design->parsed()) return cmd_design(f, out);
    if (oc->parsed()) return cmd_oc(f, out);
    if (init->parsed()) return cmd_monitor_init(f, out);
    if (obs->parsed()) return cmd_monitor_observe(f, out);
    if (status->parsed()) return cmd_monitor_status(f, out);
    if (est->parsed()) return cmd_estimate(f, out);
    if (sim->parsed()) return cmd_simulate(f, out);
    if (repro->parsed()) return cmd_repro(f, out);
    err << "error: no subcommand\n";
    return exit_code::kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kUsage;
  } catch (const DegenerateDesignError& e) {
    err << "error: degenerate design: " << e.what() << "\n";
    return exit_code::kDegenerate;
  } catch (const NoSolutionError& e) {
    err << "error: no design: " << e.what() << "\n";
    return exit_code::kDegenerate;
  } catch (const SearchBoundError& e) {
    err << "error: no design: " << e.what() << "\n";
    return exit_code::kDegenerate;
  } catch (const LogFormatError& e) {
    err << "error: event log: " << e.what() << "\n";
    return exit_code::kLogFormat;
  } catch (const SequenceGapError& e) {
    err << "error: event log: " << e.what() << "\n";
    return exit_code::kLogFormat;
  } catch (const DuplicateObservationError& e) {
    err << "error: event log: " << e.what() << "\n";
    return exit_code::kLogFormat;
  } catch (const TerminalStateError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kTerminal;
  } catch (const NonTerminalError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kNotTerminal;
  } catch (const SnapshotIoError& e) {
    err << "error: snapshot: " << e.what() << "\n";
    return exit_code::kSnapshot;
  } catch (const SnapshotCorruptError& e) {
    err << "error: snapshot: " << e.what() << "\n";
    return exit_code::kSnapshot;
  } catch (const SnapshotVersionError& e) {
    err << "error: snapshot: " << e.what() << "\n";
    return exit_code::kSnapshot;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kInternal;
  }
}

}  // namespace curtail
