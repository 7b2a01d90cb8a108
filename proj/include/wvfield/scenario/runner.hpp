#ifndef WVFIELD_SCENARIO_RUNNER_HPP
#define WVFIELD_SCENARIO_RUNNER_HPP

#include <string>
#include <vector>

#include "wvfield/scenario/config.hpp"

namespace wvf::scenario {

const char* version();

struct OutputRecord {
    std::string path;  // relative to the run directory
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string kind;
    std::uint64_t seed = 0;
    std::string version;
    std::string started_at;
    std::string finished_at;
    bool pass = true;
    std::vector<OutputRecord> outputs;
    std::string directory;  // where everything was written
};

// Resolution order: explicit argument, config out_dir, WVFIELD_OUT, ".".
std::string resolve_out_dir(const ScenarioConfig& config,
                            const std::string& cli_out_dir);

// Executes one scenario: writes a provisional manifest, the scenario's
// outputs (atomically), then the finalized manifest with checksums.
// pass == false means a scenario-embedded assertion failed.
RunManifest run_scenario(const ScenarioConfig& config,
                         const std::string& out_dir);

// One sub-run per value (seed derived from the base seed and the sweep
// index), tabulated into a shared sweep.csv.
RunManifest sweep_scenario(const ScenarioConfig& config,
                           const std::string& parameter,
                           const std::vector<double>& values,
                           const std::string& out_dir);

}  // namespace wvf::scenario

#endif
