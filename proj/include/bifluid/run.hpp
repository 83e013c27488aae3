#pragma once

#include "bifluid/config.hpp"

// Orchestrates one configured run: builds the grid and initial data,
// dispatches on the mode, writes every artifact (CSV series and snapshots,
// JSON reports, manifest) under the configured output directory, and maps
// failures to process exit codes.

namespace bifluid {

// Returns the process exit code (0 ok, 2 config, 3 invariant, 4 solver).
int run(const RunConfig& config);

// Initial data from the config's constants + perturbation (or data_file).
struct InitialData {
    ScalarField R0, Q0;
    VectorField u0;
};
InitialData make_initial_data(const RunConfig& config, GridPtr grid);

} // namespace bifluid
