#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "semiglobal/expansion.hpp"

namespace semiglobal {

struct GridSpec {
  int count = 41;
  double delta = 5.0;
};

// One run = one subcommand execution. Flags override config-file fields.
struct RunConfig {
  std::string command;  // solve | compare | diagnose | irf
  std::string model = "burnside";
  std::map<std::string, double> params;
  std::vector<double> x0;  // empty: model default (steady state)
  std::vector<double> z0;  // empty: zeros
  double sigma = -1.0;     // < 0: model default
  int order = 2;
  Index horizon = 300;
  GridSpec grid;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  double shock = 1.0;      // date-1 innovation size for irf
  bool parallel = true;

  void validate() const;
};

struct RunReport {
  int exit_code = 0;
  std::string summary;                      // human-readable, for stdout
  std::map<std::string, double> timings_ms; // volatile; kept out of the JSON
  std::vector<std::string> files_written;
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

// Executes the configured subcommand and writes policy.csv / irf.csv /
// solution.csv / diagnostics.json under out_dir as applicable. Solver errors
// become a structured record in diagnostics.json and a nonzero exit code.
RunReport run(const RunConfig& config);

// Built-in model registry.
ModelSpec make_model_by_name(const std::string& name,
                             const std::map<std::string, double>& params);
std::vector<std::string> registered_models();

}  // namespace semiglobal
