#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glued.hpp"

namespace neckspec {

// One JSON file per run. Unknown keys are rejected.
//   spectrum: {"file": path} | {"builtin": "circle", "length": l, "modes": m} |
//             {"builtin": "torus2", "lattice": n} | an inline spectrum object
//   blocks:   [block, block], each a block object with an optional "spectrum" override
//   q, T, s:  lists;  h, cutoff, seed, cases, R0, out, name: scalars
struct ExperimentConfig {
  std::string name;
  std::shared_ptr<const CrossSectionSpectrum> spectrum;
  std::optional<BuildingBlock> block1, block2;
  std::vector<int> q{0};
  std::vector<double> T, s;
  double h = 1.0 / 16;
  std::optional<double> cutoff;
  std::uint64_t seed = 1;
  int cases = 20;
  std::optional<double> R0;
  std::filesystem::path out = "neckspec_out";

  // explicit cutoff, else 25 (pi / T_max)^2 s_max, else 4
  double mode_cutoff() const;
};

// Relative paths inside the config resolve against base_dir. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& file);

// NECKSPEC_THREADS, else the hardware concurrency. Throws ConfigError on a malformed value.
int thread_cap();

struct CommandResult {
  bool pass = true;
  std::string summary;
  std::vector<std::filesystem::path> files;
};

CommandResult cmd_roots(const ExperimentConfig& cfg, std::ostream& table);
CommandResult cmd_q0check(const ExperimentConfig& cfg);
CommandResult cmd_paircheck(const ExperimentConfig& cfg);
CommandResult cmd_glue(const ExperimentConfig& cfg);
CommandResult cmd_density(const ExperimentConfig& cfg);

// Dispatch by name, with the exit-code contract: 0 pass, 1 fail, 2 config error.
// The summary line goes to out, error messages to err.
int run_command(const std::string& command, const std::filesystem::path& config,
                const std::optional<std::filesystem::path>& out_dir, std::ostream& out, std::ostream& err);

}  // namespace neckspec
