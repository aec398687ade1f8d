#include "curtail/monitor.hpp"

#include <istream>
#include <regex>

#include <fmt/format.h>
#include <zlib.h>

#include "json.hpp"

namespace curtail {
namespace {

using nlohmann::json;

std::string checksum_of(const std::string& body) {
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  return fmt::format("crc32:{:08x}", crc);
}

json design_to_json(const TestDesign& d) {
  json j;
  j["n_star"] = d.n_star;
  j["k_star"] = d.k_star;
  j["attained_alpha"] = d.attained_alpha;
  j["attained_beta"] = d.attained_beta;
  j["mode"] = to_string(d.mode);
  j["alpha"] = d.params.alpha;
  j["beta"] = d.params.beta;
  j["theta0"] = d.params.theta0;
  j["theta1"] = d.params.theta1;
  j["delta"] = d.delta ? json(*d.delta) : json(nullptr);
  return j;
}

TestDesign design_from_json(const json& j) {
  TestDesign d;
  d.n_star = j.at("n_star").get<Count>();
  d.k_star = j.at("k_star").get<Count>();
  d.attained_alpha = j.at("attained_alpha").get<double>();
  d.attained_beta = j.at("attained_beta").get<double>();
  d.mode = design_mode_from_string(j.at("mode").get<std::string>());
  d.params.alpha = j.at("alpha").get<double>();
  d.params.beta = j.at("beta").get<double>();
  d.params.theta0 = j.at("theta0").get<double>();
  d.params.theta1 = j.at("theta1").get<double>();
  if (!j.at("delta").is_null()) d.delta = j.at("delta").get<double>();
  return d;
}

json state_body(const MonitorState& s) {
  json j;
  j["format_version"] = kSnapshotFormatVersion;
  j["design"] = design_to_json(s.design);
  j["n"] = s.n;
  j["s_n"] = s.s_n;
  j["status"] = to_string(s.status);
  j["m_star"] = s.m_star ? json(*s.m_star) : json(nullptr);
  return j;
}

void check_invariants(const MonitorState& s) {
  const auto& d = s.design;
  d.validate();
  d.params.validate();
  const bool counters_ok = s.s_n >= 0 && s.s_n <= s.n && s.n <= d.n_star && s.s_n <= d.k_star + 1;
  bool status_ok = false;
  switch (s.status) {
    case TrialStatus::StoppedRejected:
      status_ok = s.s_n == d.k_star + 1 && s.m_star == s.n;
      break;
    case TrialStatus::CompletedNotRejected:
      status_ok = s.n == d.n_star && s.s_n <= d.k_star && s.m_star == d.n_star;
      break;
    case TrialStatus::Running:
      status_ok = s.n < d.n_star && s.s_n <= d.k_star && !s.m_star;
      break;
  }
  if (!counters_ok || !status_ok) {
    throw SnapshotCorruptError(fmt::format(
        "snapshot violates trial invariants (n={}, s_n={}, status={})", s.n, s.s_n,
        to_string(s.status)));
  }
}

const std::regex& rfc3339() {
  static const std::regex re(
      R"(^\d{4}-\d{2}-\d{2}[Tt ]\d{2}:\d{2}:\d{2}(\.\d+)?([Zz]|[+-]\d{2}:\d{2})$)");
  return re;
}

}  // namespace

std::string to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::Running: return "Running";
    case TrialStatus::StoppedRejected: return "StoppedRejected";
    case TrialStatus::CompletedNotRejected: return "CompletedNotRejected";
  }
  return "?";
}

std::string to_string(Decision decision) {
  switch (decision) {
    case Decision::Continue: return "Continue";
    case Decision::RejectH0: return "RejectH0";
    case Decision::NotRejectH0: return "NotRejectH0";
  }
  return "?";
}

TrialStatus trial_status_from_string(std::string_view text) {
  if (text == "Running") return TrialStatus::Running;
  if (text == "StoppedRejected") return TrialStatus::StoppedRejected;
  if (text == "CompletedNotRejected") return TrialStatus::CompletedNotRejected;
  throw DomainError(fmt::format("unknown trial status '{}'", text));
}

bool operator==(const MonitorState& lhs, const MonitorState& rhs) {
  const auto& a = lhs.design;
  const auto& b = rhs.design;
  return a.n_star == b.n_star && a.k_star == b.k_star && a.attained_alpha == b.attained_alpha &&
         a.attained_beta == b.attained_beta && a.mode == b.mode &&
         a.params.alpha == b.params.alpha && a.params.beta == b.params.beta &&
         a.params.theta0 == b.params.theta0 && a.params.theta1 == b.params.theta1 &&
         a.delta == b.delta && lhs.n == rhs.n && lhs.s_n == rhs.s_n &&
         lhs.status == rhs.status && lhs.m_star == rhs.m_star;
}

MonitorState monitor_new(const TestDesign& design) {
  design.validate();
  MonitorState state;
  state.design = design;
  return state;
}

ObserveReport observe(MonitorState& state, std::span<const Observation> batch) {
  if (state.terminal()) {
    throw TerminalStateError(fmt::format("trial already terminated ({}) at n={}",
                                         to_string(state.status), state.n));
  }
  MonitorState next = state;
  ObserveReport report;
  for (const Observation& obs : batch) {
    if (next.terminal()) break;
    const Count expected = next.n + 1;
    if (obs.sequence_no <= next.n) {
      throw DuplicateObservationError(
          fmt::format("sequence number {} already applied (next expected {})", obs.sequence_no,
                      expected));
    }
    if (obs.sequence_no != expected) {
      throw SequenceGapError(
          fmt::format("sequence gap: expected {}, got {}", expected, obs.sequence_no));
    }
    if (obs.outcome != 0 && obs.outcome != 1) {
      throw LogFormatError(fmt::format("outcome must be 0 or 1, got {} at sequence {}",
                                       obs.outcome, obs.sequence_no));
    }
    advance(next, obs.outcome == 1);
    ++report.consumed;
  }
  report.dropped = static_cast<Count>(batch.size()) - report.consumed;
  report.decision = decision(next);
  state = std::move(next);
  return report;
}

Decision decision(const MonitorState& state) {
  switch (state.status) {
    case TrialStatus::StoppedRejected: return Decision::RejectH0;
    case TrialStatus::CompletedNotRejected: return Decision::NotRejectH0;
    case TrialStatus::Running: return Decision::Continue;
  }
  return Decision::Continue;
}

std::string persist(const MonitorState& state) {
  json body = state_body(state);
  body["checksum"] = checksum_of(body.dump());
  return body.dump();
}

MonitorState restore(std::string_view snapshot) {
  json body;
  try {
    body = json::parse(snapshot);
  } catch (const json::exception& e) {
    throw SnapshotCorruptError(fmt::format("snapshot is not valid JSON: {}", e.what()));
  }
  if (!body.is_object() || !body.contains("format_version") ||
      !body["format_version"].is_number_integer()) {
    throw SnapshotCorruptError("snapshot has no integer format_version");
  }
  if (body["format_version"].get<int>() != kSnapshotFormatVersion) {
    throw SnapshotVersionError(fmt::format("unsupported snapshot format_version {}",
                                           body["format_version"].dump()));
  }
  if (!body.contains("checksum") || !body["checksum"].is_string()) {
    throw SnapshotCorruptError("snapshot has no checksum");
  }
  const std::string stored = body["checksum"].get<std::string>();
  body.erase("checksum");
  if (checksum_of(body.dump()) != stored) {
    throw SnapshotCorruptError("snapshot checksum mismatch");
  }
  MonitorState state;
  try {
    state.design = design_from_json(body.at("design"));
    state.n = body.at("n").get<Count>();
    state.s_n = body.at("s_n").get<Count>();
    state.status = trial_status_from_string(body.at("status").get<std::string>());
    if (!body.at("m_star").is_null()) state.m_star = body.at("m_star").get<Count>();
  } catch (const json::exception& e) {
    throw SnapshotCorruptError(fmt::format("snapshot field error: {}", e.what()));
  } catch (const DomainError& e) {
    throw SnapshotCorruptError(fmt::format("snapshot field error: {}", e.what()));
  }
  try {
    check_invariants(state);
  } catch (const DomainError& e) {
    throw SnapshotCorruptError(fmt::format("snapshot design invalid: {}", e.what()));
  }
  return state;
}

Observation parse_event(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw LogFormatError(fmt::format("event is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw LogFormatError("event must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "seq" && key != "subject" && key != "outcome" && key != "ts") {
      throw LogFormatError(fmt::format("unknown event field '{}'", key));
    }
  }
  Observation obs;
  if (!j.contains("seq") || !j["seq"].is_number_integer()) {
    throw LogFormatError("event needs an integer 'seq'");
  }
  obs.sequence_no = j["seq"].get<Count>();
  if (obs.sequence_no < 1) throw LogFormatError("event 'seq' must be >= 1");
  if (!j.contains("subject") || !j["subject"].is_string()) {
    throw LogFormatError("event needs a string 'subject'");
  }
  obs.subject_id = j["subject"].get<std::string>();
  if (!j.contains("outcome") || !j["outcome"].is_number_integer()) {
    throw LogFormatError("event needs an integer 'outcome'");
  }
  const auto outcome = j["outcome"].get<std::int64_t>();
  if (outcome != 0 && outcome != 1) {
    throw LogFormatError(fmt::format("event 'outcome' must be 0 or 1, got {}", outcome));
  }
  obs.outcome = static_cast<int>(outcome);
  if (j.contains("ts")) {
    if (!j["ts"].is_string() || !std::regex_match(j["ts"].get<std::string>(), rfc3339())) {
      throw LogFormatError("event 'ts' must be an RFC3339 timestamp string");
    }
    obs.timestamp = j["ts"].get<std::string>();
  }
  return obs;
}

std::string format_event(const Observation& observation) {
  json j;
  j["seq"] = observation.sequence_no;
  j["subject"] = observation.subject_id;
  j["outcome"] = observation.outcome;
  if (observation.timestamp) j["ts"] = *observation.timestamp;
  return j.dump();
}

std::vector<Observation> read_event_log(std::istream& in) {
  std::vector<Observation> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      events.push_back(parse_event(line));
    } catch (const LogFormatError& e) {
      throw LogFormatError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return events;
}

}  // namespace curtail
