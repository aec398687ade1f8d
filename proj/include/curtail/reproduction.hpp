#pragma once
// Recomputes the published reference tables and the anaphylaxis worked
// example, cell by cell, next to the published values.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace curtail {

struct ReproCell {
  std::string label;
  double computed = 0.0;
  double published = 0.0;
  double tolerance = 0.0;  // absolute
  bool pass = false;
  std::string note;
};

struct ReproReport {
  std::string target;
  std::vector<ReproCell> cells;
  std::map<std::string, std::string> artifacts;  // file name -> CSV body

  bool pass() const;
};

struct ReproOptions {
  std::uint64_t seed = 42;
  std::int64_t replications = 10'000;
  unsigned threads = 0;
};

/// Absolute half-unit in the last printed digit of a decimal literal,
/// e.g. "0.0647" -> 5e-5 and "2.0804e-05" -> 5e-10.
double half_unit(std::string_view printed);
/// Half-unit at `digits` significant figures of `value`.
double half_unit_sig(double value, int digits);

ReproReport repro_table1();
ReproReport repro_table2();
ReproReport repro_table3();
ReproReport repro_table4(const ReproOptions& options);
ReproReport repro_fig2();
ReproReport repro_fig3();
ReproReport repro_covid_example();

/// Known targets: table1..table4, fig2, fig3, covid-example, all.
std::vector<ReproReport> run_repro(std::string_view target, const ReproOptions& options);
bool is_repro_target(std::string_view target);

std::string format_repro(const ReproReport& report);

}  // namespace curtail
