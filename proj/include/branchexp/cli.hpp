#ifndef BRANCHEXP_CLI_HPP
#define BRANCHEXP_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "branchexp/exponents.hpp"
#include "branchexp/laws.hpp"

namespace branchexp::cli {

enum class Command { kAnalyze, kSimulate, kLdCheck, kBrw, kFpp, kVerify };
enum class Estimator { kPlain, kTilted, kEnumerate };

const char* command_name(Command c) noexcept;
const char* estimator_name(Estimator e) noexcept;
/// Commands that draw random numbers and therefore need a seed.
bool is_stochastic(Command c) noexcept;

struct Tolerances {
  double perron = 1e-12;
  double golden = 1e-10;
  double cross_check = 1e-6;
  double critical_band = 1e-9;
  double root = 1e-10;
  double speed = 1e-10;
  bool operator==(const Tolerances&) const = default;
};

struct LdConfig {
  std::vector<double> a_grid;
  int n = 40;
  bool tilt = false;
  std::uint64_t min_hits = 100;
  bool operator==(const LdConfig&) const = default;
};

struct BrwConfig {
  int n_max = 20;
  bool operator==(const BrwConfig&) const = default;
};

struct RunConfig {
  int d = 2;
  std::optional<ModelSpec> model;                       // label laws
  std::optional<std::vector<PassageLaw>> passage_laws;  // fpp only; model is derived
  Command command = Command::kAnalyze;
  std::vector<double> t_grid;
  std::uint64_t reps = 1000;
  int depth_cap = 0;  // 0: chosen from the certified tail bound
  std::optional<std::uint64_t> seed;
  Tolerances tolerances;
  std::string output_path;  // directory; empty writes to stdout
  int root_colour = 1;      // 1-based
  Estimator estimator = Estimator::kPlain;
  LdConfig ld;
  BrwConfig brw;
  int workers = 1;

  bool operator==(const RunConfig&) const = default;
};

/// Parses and validates a JSON run document. Throws ParseError for
/// malformed JSON or wrongly typed fields, ValidationError listing every
/// violated invariant otherwise.
RunConfig parse_config(std::string_view text);
/// JSON text that parse_config maps back to an equal RunConfig.
std::string emit_config(const RunConfig& config);

SpectralOptions spectral_options(const Tolerances& t);
ExponentOptions exponent_options(const Tolerances& t);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Property suite run by the `verify` command. Throws AssumptionViolation
/// when the model is outside the finite regime or has mu <= 0, after the
/// model-independent checks have been recorded.
std::vector<Check> verify_model(const RunConfig& config);

/// Result files keyed by name, in emission order.
struct Output {
  std::vector<std::pair<std::string, std::string>> files;
  int status = 0;  // 0 ok, 1 a verification check failed
};

/// Executes the configured command. Errors propagate as exceptions.
Output execute(const RunConfig& config);
/// Writes each file under config.output_path (created if missing), or all
/// of them to `out` when the path is empty.
void write_output(const RunConfig& config, const Output& output, std::ostream& out);

}  // namespace branchexp::cli

#endif  // BRANCHEXP_CLI_HPP
