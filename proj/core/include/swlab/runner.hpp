#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "swlab/config.hpp"

namespace swlab {

struct RunManifest {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> only;  // empty = all
  int threads = 1;
  std::uint64_t seed = 1;
};

// Exit codes of the batch front door.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitTolerance = 3;

/// Executes each configured experiment, writes one CSV per experiment plus
/// summary.txt; returns kExitOk iff everything is valid and all thresholds
/// pass. Progress goes to `log`.
int run_experiments(const RunManifest& manifest, std::ostream& log);

/// Built-in identity suite at fixed small sizes; one line per check.
/// `inject_fault` (e.g. "hermitian") corrupts the corresponding input to
/// exercise the failure path.
int run_verify(std::ostream& log, const std::string& inject_fault = "");

/// CSV cell formatting: 17 significant digits, LF line endings.
std::string format_csv_value(double v);
void write_cells_csv(std::ostream& os, const std::vector<CellRecord>& cells);

}  // namespace swlab
