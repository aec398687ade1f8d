#pragma once
// Command-line front end. Exit codes:
//   0  success, Continue or NotRejectH0
//   1  unexpected internal error
//   2  invalid flags, config or grid
//   3  degenerate design (no solution for the requested parameters)
//   4  event-log format violation, sequence gap or duplicate
//   5  observation offered to a terminated trial
//   6  estimate requested for a running trial
//   7  reproduction cell outside tolerance
//   9  snapshot unreadable, corrupt or of an unknown version
//  10  RejectH0 (stop signal)

#include <iosfwd>

namespace curtail {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kInternal = 1;
inline constexpr int kUsage = 2;
inline constexpr int kDegenerate = 3;
inline constexpr int kLogFormat = 4;
inline constexpr int kTerminal = 5;
inline constexpr int kNotTerminal = 6;
inline constexpr int kReproFailed = 7;
inline constexpr int kSnapshot = 9;
inline constexpr int kReject = 10;
}  // namespace exit_code

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace curtail
