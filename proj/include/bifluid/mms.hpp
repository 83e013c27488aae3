#pragma once

#include <vector>

#include "bifluid/closure.hpp"
#include "bifluid/grid.hpp"

// Manufactured-solution verification of the implicit linear stepper: smooth
// (sigma, eta, v) with v = 0 on the boundary are chosen analytically, their
// residual is fed in as forcing, and the discrete error at the final time
// measures the scheme's accuracy directly. Expected orders: 2 in h, 1 in dt.

namespace bifluid::mms {

struct StudyRow {
    double h = 0.0;
    double dt = 0.0;
    double err_sigma = 0.0, err_eta = 0.0, err_v = 0.0, err_total = 0.0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    double observed_order = 0.0; // least-squares slope of log err vs log (h or dt)
};

// Discrete L2 error of one run against the manufactured fields.
StudyRow run_case(int dim, std::size_t nx, double dt, double T,
                  const ClosureParams& params);

// Spatial study: refine h with dt tied to h^2 (temporal error subdominant).
StudyResult spatial_study(int dim, int levels, std::size_t nx0, double T,
                          const ClosureParams& params);

// Temporal study: fixed fine grid, dt halved per level.
StudyResult temporal_study(int dim, int levels, std::size_t nx, double dt0,
                           double T, const ClosureParams& params);

} // namespace bifluid::mms
