#pragma once

#include <vector>

#include "bifluid/grid.hpp"

namespace bifluid {

// Discrete (sigma, eta, v) snapshots at uniform dt, relative to a frozen
// linearization state owned by the caller.
struct TimeLevel {
    ScalarField sigma, eta;
    VectorField v;
};

struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<TimeLevel> levels;

    GridPtr grid() const { return levels.front().sigma.grid_ptr(); }
    std::size_t steps() const { return levels.empty() ? 0 : levels.size() - 1; }
    double time(std::size_t n) const { return t0 + dt * static_cast<double>(n); }
    double horizon() const { return dt * static_cast<double>(steps()); }
};

} // namespace bifluid
