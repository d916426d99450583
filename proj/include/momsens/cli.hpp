// Command-line front end: simulate, oracle, local and sobol subcommands.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace momsens::cli {

enum class Command { simulate, oracle, local, sobol };

struct RunConfig {
  Command command = Command::simulate;
  std::string model_path;
  double t_end = 10.0;
  std::size_t points = 101;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double perturb = 0.20;
  double fd_step = 1e-8;
  std::size_t n = 15000;
  std::uint64_t seed = 1;
  std::string estimator = "martinez";
  std::vector<std::int64_t> bound;  // empty: default truncation
  bool diagonal_covariance = false;
  std::string out;                  // empty: standard output
  std::string sweep_out;            // local only; empty: derived from out
  int threads = 0;                  // from MOMSENS_THREADS; <= 0 is the OpenMP default
};

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;
inline constexpr int kInputError = 3;

/// Executes one configured command. Failures are reported on `err` as a
/// single line "error: <kind>: <message>" and mapped to an exit code.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv (and MOMSENS_THREADS) and calls run().
int main(int argc, char** argv);

std::string version();

}  // namespace momsens::cli
