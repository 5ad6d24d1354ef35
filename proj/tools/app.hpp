#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chiron/attack.hpp"
#include "chiron/evaluation.hpp"
#include "chiron/rating_matrix.hpp"

namespace chiron::app {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode { ok = 0, other_error = 1, config_error = 2, data_error = 3, fit_failure = 4 };

/// Every knob of a run. All fields have defaults; see default_config_text().
struct RunConfig {
  std::filesystem::path data_path;
  FileFormat format = FileFormat::tab_separated;
  RatingScale scale;
  std::string dataset = "dataset";

  SplitFractions fractions;
  std::uint64_t seed = 0;

  std::vector<std::string> methods;
  int trials = 10;
  std::filesystem::path output = "out";

  MethodSettings settings;
  AttackSpec attack;
  std::vector<double> sweep_sizes;
};

/// The defaults as an INI document, one key per line.
std::string default_config_text();

/// Defaults, then the file (if any), then `section.key=value` overrides.
/// Unknown sections or keys and unparsable values raise ConfigError.
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::vector<std::string>& overrides);

/// Fully resolved INI text; loading it back yields the same RunConfig.
std::string resolved_config_text(const std::optional<std::filesystem::path>& path,
                                 const std::vector<std::string>& overrides);

void cmd_ingest(const RunConfig& config, std::ostream& out);
void cmd_fit(const RunConfig& config);
void cmd_attack(const RunConfig& config);
void cmd_sweep(const RunConfig& config);

/// Parses the command line, runs the command and maps failures to ExitCode.
int run(int argc, const char* const* argv);

}  // namespace chiron::app
