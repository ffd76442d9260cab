#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "actrec/constraints.hpp"
#include "actrec/scene.hpp"
#include "actrec/trace.hpp"

namespace actrec {

/// Exit codes: 0 success, 2 bad user input, 1 anything else.
enum ExitCode : int { exit_ok = 0, exit_internal = 1, exit_input = 2 };

/// Settings read from a YAML config file. Every field is optional; command
/// line flags win over the file.
struct RunConfig {
  std::optional<std::string> ontology;
  std::optional<std::string> actions;
  std::optional<double> th_d;
  std::optional<int> th_n;
  std::optional<double> sigma_pos;
  std::optional<double> eps_rot;
  std::optional<double> eps_col;
  std::optional<int> k_miss;
  std::optional<bool> c9_vector;
  std::optional<bool> strict_pour;
  std::optional<std::size_t> init_window;
  std::optional<bool> lenient;
  std::optional<std::string> report_format;
  std::optional<double> min_overlap;
};

RunConfig load_config_file(const std::string& path);

/// Environment variable naming a config file used when --config is absent.
inline constexpr const char* kConfigEnv = "ACTREC_CONFIG";

/// Per-frame truth of C1..C12 for every candidate binding, one JSON record
/// per (frame, binding).
void dump_constraints(const Trace& trace, const SceneState& scene, const Ontology& ontology,
                      const Thresholds& thresholds, std::ostream& out);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace actrec
