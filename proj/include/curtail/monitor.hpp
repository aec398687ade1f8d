#pragma once
// Streaming state machine for one trial: stop and reject as soon as the
// (k*+1)-th side effect arrives, otherwise complete at N* without rejecting.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curtail/design.hpp"
#include "curtail/error.hpp"

namespace curtail {

struct Observation {
  std::string subject_id;
  int outcome = 0;  // 1 = side effect
  Count sequence_no = 0;
  std::optional<std::string> timestamp;  // metadata only
};

enum class TrialStatus { Running, StoppedRejected, CompletedNotRejected };
enum class Decision { Continue, RejectH0, NotRejectH0 };

std::string to_string(TrialStatus status);
std::string to_string(Decision decision);
TrialStatus trial_status_from_string(std::string_view text);

struct MonitorState {
  TestDesign design;
  Count n = 0;
  Count s_n = 0;
  TrialStatus status = TrialStatus::Running;
  std::optional<Count> m_star;

  bool terminal() const { return status != TrialStatus::Running; }
};

bool operator==(const MonitorState& lhs, const MonitorState& rhs);

struct ObserveReport {
  Count consumed = 0;  // batch items applied
  Count dropped = 0;   // items left unprocessed after a mid-batch stop
  Decision decision = Decision::Continue;
};

MonitorState monitor_new(const TestDesign& design);

/// Applies the batch in order. All-or-nothing: on error the state is left
/// untouched. Throws TerminalStateError, SequenceGapError,
/// DuplicateObservationError, or LogFormatError (outcome outside {0,1}).
ObserveReport observe(MonitorState& state, std::span<const Observation> batch);

Decision decision(const MonitorState& state);

/// Single-observation step without sequence bookkeeping, used by simulation.
inline Decision advance(MonitorState& state, bool side_effect) {
  if (state.terminal()) throw TerminalStateError("trial has already terminated");
  ++state.n;
  if (side_effect) ++state.s_n;
  if (state.s_n == state.design.k_star + 1) {
    state.status = TrialStatus::StoppedRejected;
    state.m_star = state.n;
    return Decision::RejectH0;
  }
  if (state.n == state.design.n_star) {
    state.status = TrialStatus::CompletedNotRejected;
    state.m_star = state.n;
    return Decision::NotRejectH0;
  }
  return Decision::Continue;
}

inline constexpr int kSnapshotFormatVersion = 1;

/// Versioned, checksummed single-record JSON.
std::string persist(const MonitorState& state);
/// Throws SnapshotVersionError or SnapshotCorruptError.
MonitorState restore(std::string_view snapshot);

/// One event-log record: {"seq": int, "subject": string, "outcome": 0|1, "ts"?: RFC3339}.
Observation parse_event(std::string_view line);
std::string format_event(const Observation& observation);
/// Reads newline-delimited records, skipping blank lines.
std::vector<Observation> read_event_log(std::istream& in);

}  // namespace curtail
