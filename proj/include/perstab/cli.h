#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "perstab/propagator.h"
#include "perstab/serialization.h"

namespace perstab::cli {

enum class Command { kCertify, kStabilize, kSimulate, kSpectrum, kUcp, kHeatDemo };
enum class OutputFormat { kJson, kCsv, kBoth };

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
/// "No certificate found" or "not detectable": an answer, not a failure.
inline constexpr int kExitVerdict = 2;

struct RunConfig {
  Command command{Command::kCertify};
  /// Builtin name (optionally "builtin:"-prefixed) or a system JSON path.
  std::string system{"heat8"};
  int n{1};
  /// certify/stabilize sweep n, n+1, ..., n_max; defaults to n.
  std::optional<int> n_max;
  double gamma_min{1e-8};
  double gamma_max{1e2};
  int gamma_points{25};
  int k_max{10};
  /// Simulation / decay-fit horizon; per-command default when absent.
  std::optional<double> horizon;
  std::uint64_t seed{0};
  std::string output_dir{"."};
  OutputFormat format{OutputFormat::kBoth};
  int steps_per_period{kDefaultStepsPerPeriod};
  /// Relative threshold of the unique-continuation test.
  double ucp_tol{1e-9};
};

std::optional<Command> parse_command(std::string_view name);
std::string_view command_name(Command c);
std::optional<OutputFormat> parse_format(std::string_view name);

/// Overwrites the fields present in `j` (same keys as the long flags, with
/// underscores: gamma_min, k_max, out, ...). Throws std::invalid_argument
/// on unknown keys or wrong types.
void apply_config_json(RunConfig& cfg, const Json& j);

/// Throws std::invalid_argument on out-of-range values.
void validate(const RunConfig& cfg);

/// Executes one command, writing artifacts under cfg.output_dir and a short
/// summary to `out`. Returns kExitOk, kExitVerdict or kExitError.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses `prog <command> [flags]` (flags override --config file values)
/// and calls run.
int main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& err);

}  // namespace perstab::cli
