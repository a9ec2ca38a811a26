#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "slipstokes/common.hpp"

namespace slipstokes {
namespace cli {

using nlohmann::json;

/// Config rejected before any computation runs: unknown keys, missing or
/// mistyped fields, tolerance sets that do not match the runner's check set,
/// or "_file" entries pointing at nothing. Maps to process exit code 2, and
/// no artifact is written.
class ConfigError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] inline void config_fail(const std::string& msg) { throw ConfigError(msg); }

/// One tolerance gate. `op` is "le" or "ge"; non-finite values never pass.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string op = "le";
  bool pass = false;

  json to_json() const;
};

/// CSV payload, written to tables/<name>.csv.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Everything a run produces, held in memory until the run finishes so a
/// rejected config never leaves partial files behind.
struct RunArtifacts {
  json summary;
  std::vector<Table> tables;
  std::vector<json> sweeps;  // one object per line of sweeps.jsonl
  std::vector<Check> checks;
  json timings;  // wall-clock seconds per stage; never part of summary
  bool ok = true;
  std::string failed;  // name of the first failing check, empty when ok
};

struct ExperimentConfig {
  std::string subcommand;
  uint64_t seed = 0;
  int threads = 1;
  bool verbose = false;
  json body;  // validated config document; "seed" reflects any override
};

const std::vector<std::string>& subcommands();

/// Validates `doc` as a config for `subcommand`: the seed is mandatory,
/// a declared "subcommand" must agree, and every key ending in "_file" must
/// name an existing file. A command-line seed overrides the config seed and
/// is folded back into the document so the echoed config stays faithful.
ExperimentConfig make_config(const std::string& subcommand, const json& doc,
                             const uint64_t* seed_override);

/// File-reading variant of make_config; parse failures are config errors.
ExperimentConfig load_config(const std::string& subcommand, const std::string& path,
                             const uint64_t* seed_override);

/// Dispatches to the subcommand runner. Throws ConfigError for schema
/// violations and Error when a solver gives up; tolerance failures are not
/// exceptions, they are reported through the returned checks.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

/// Writes summary.json, tables/*.csv and sweeps.jsonl under out_dir,
/// creating directories as needed.
void write_artifacts(const std::string& out_dir, const RunArtifacts& art);

/// Command-line entry point. Returns 0 when every check passes, 1 when a
/// check fails or a solver aborts, 2 on config or usage errors.
int cli_main(int argc, const char* const* argv);

}  // namespace cli
}  // namespace slipstokes
