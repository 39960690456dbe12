#pragma once

#include "obsflow/numgrid.hpp"

// single-header nlohmann/json lives in vendor/json.hpp
#include "json.hpp"

#include <string>

namespace obsflow {

/// Parsed experiment configuration. Mode-specific required fields are
/// validated at parse time, including the resonance hypotheses.
struct ExperimentConfig {
    std::string mode;  // frft | hermite-flow | hermite-observe | special-flow |
                       // observe | set-translate | calibrate | sweep
    nlohmann::ordered_json params;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int threads = 1;
};

ExperimentConfig parse_config(const nlohmann::ordered_json& j);
ExperimentConfig load_config(const std::string& path);

/// Run one experiment; writes report.json and any CSV artifacts under
/// config.out_dir. Deterministic for a fixed (config, seed). Throws on
/// domain errors; the CLI converts those to machine-readable error JSON.
nlohmann::ordered_json run_experiment(const ExperimentConfig& config);

/// Run the sweep mode: one experiment per parameter value, aggregated into
/// sweep.csv in declared order. Per-point failures are recorded in-row and
/// the sweep continues.
nlohmann::ordered_json run_sweep(const ExperimentConfig& config);

/// Parse a ShapeSpec from JSON ({"kind": "box"|"ball"|"union"|"complement", ...}).
ShapeSpec shape_from_json(const nlohmann::ordered_json& j);
UniformGrid grid_from_json(const nlohmann::ordered_json& j);

}  // namespace obsflow
