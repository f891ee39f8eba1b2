#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ellipspin/spin_dynamics.hpp"

namespace ellipspin::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kRuntimeError = 3 };

/// Parse failure located at a 1-based line and column of the config text.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct Scenario {
  SimParams params;
  double tau_max = 0.0;
  int n_samples = 0;
  double tol = kDefaultTolerance;
  double spin_j = 0.5;
  SpinState initial;
  std::vector<std::string> outputs{"trajectory"};

  std::vector<double> k_values;
  std::vector<double> delta_values;
  std::vector<double> h_values;
  std::size_t max_runs = 100000;

  bool wants(std::string_view output) const;
};

/// Flat `key = value` text; `#` starts a comment. Lists are comma separated.
/// Warnings (such as a dimensionless key overriding a physical one) go to
/// `warnings`.
Scenario parse_config(std::string_view text, std::ostream& warnings);
Scenario load_config(const std::string& path, std::ostream& warnings);

/// Shortest round-trip-safe decimal with 17 significant digits.
std::string format_number(double value);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, double initial_norm);

int cmd_simulate(const Scenario& scenario, std::ostream& csv, std::ostream& report);
int cmd_sweep(const Scenario& scenario, std::ostream& csv, std::ostream& report);
/// suite is one of invariants, heun, wigner, all.
int cmd_verify(const std::string& suite, double tol, std::ostream& out);
int cmd_elliptic_table(double k, double u_max, int n, std::ostream& csv, std::ostream& err);

/// Thread count for sweeps: ELLIPSPIN_THREADS if set, else the hardware
/// concurrency, never more than `runs`.
unsigned sweep_threads(std::size_t runs);

/// Entry point used by the executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ellipspin::cli
