#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bifluid/diagnostics.hpp"
#include "bifluid/lagrangian.hpp"
#include "bifluid/linear_core.hpp"
#include "bifluid/trajectory.hpp"

// Nonlinear solver: the contraction map S sends a guessed trajectory to the
// solution of the linearized system with right-hand sides evaluated at the
// guess; its fixed point solves the Lagrangian system on the window. Windows
// are marched in one Lagrangian frame anchored at t = 0; local mode
// re-freezes the linearization data at each window start, global mode keeps
// the constant state throughout.

namespace bifluid::picard {

struct PicardConfig {
    double dt = 1e-3;
    double window_T = 0.1;
    int max_iter = 25;
    double tol = 1e-10;          // fixed-point tolerance in the discrete X norm
    double ball_M = 100.0;       // X-norm radius of the iteration ball
    double delta = 0.1;          // smallness budget for int |grad v|_inf
    double density_floor = 1e-3; // lower bound for the total density
    double lambda0 = 1.0;
    double norm_p = 2.0, norm_q = 2.0;
    double closure_tol = 1e-12;
    int max_window_halvings = 6;
    double decay_C = 10.0;     // calibrated linear constant for the dichotomy
    double beta_weight = 0.0;  // weight for the recorded e^{beta t} seminorm

    void validate() const;
};

struct IterationRecord {
    int window = 0;
    int iter = 0;
    double diff_norm = 0.0;
    double ratio = 0.0; // recorded from iteration 2 on, else 0
    bool accepted = false;
};
using IterationTrace = std::vector<IterationRecord>;

// Per-snapshot monitors along the converged run.
struct SeriesRow {
    double t = 0.0;
    double mass_r = 0.0, mass_q = 0.0;        // int r J dy, int q J dy
    double alpha_min = 0.0, alpha_max = 0.0;  // volume fraction range
    double min_total_density = 0.0;
    double grad_budget = 0.0;                 // int_0^t |grad v|_inf
    double xdot_density = 0.0;
    double r_z_margin = 0.0;                  // min over nodes of Z - R
};

struct WindowResult {
    Trajectory traj;           // relative to the window's frozen state
    lagrangian::Frozen frozen; // linearization point of this window
};

struct SolveResult {
    std::vector<WindowResult> windows;
    IterationTrace trace;
    std::vector<SeriesRow> series;
    double grad_budget_total = 0.0;
    double final_time = 0.0;
    // cumulative e^{beta t}-weighted Lp-in-time norm of the dot-X density,
    // the quantity the quadratic dichotomy bounds
    double weighted_xdot_norm = 0.0;
    bool blowup_flag = false;
    // Set when a mid-run invariant violation stopped the march; the partial
    // windows/series up to that point are kept.
    bool aborted = false;
    std::string abort_reason;
    diagnostics::XNormReport first_window_norms;
};

// Snapshot of the marching state at a window boundary; serialized for
// checkpoint/restart.
struct Checkpoint {
    double t = 0.0;
    int window_index = 0;
    double window_T = 0.0;
    ScalarField r, q;
    VectorField v;
    lagrangian::MatrixField k;
    lagrangian::Tensor3Field k2;
    double budget_used = 0.0;
};

// One application of S over a window: step the linear system with
// right-hand sides evaluated along `prev`. `prev` must carry the window's
// initial level; the output carries it unchanged.
Trajectory apply_S(const Trajectory& prev, const lagrangian::Frozen& frozen,
                   const linear_core::LinearCoeffs& coeffs,
                   const linear_core::EllipticOperator& op,
                   const lagrangian::FlowHistory& base_history,
                   const ClosureParams& params, const PicardConfig& cfg);

// Local solve: windows of length window_T up to horizon_T, linearization
// re-frozen at each window's initial data.
SolveResult solve_local(const ScalarField& R0, const ScalarField& Q0,
                        const VectorField& u0, const ClosureParams& params,
                        const PicardConfig& cfg, double horizon_T,
                        const std::optional<Checkpoint>& resume = std::nullopt,
                        std::vector<Checkpoint>* checkpoints = nullptr);

// Global continuation around constants (r_star, q_star) with the
// constant-state right-hand sides; records the decay series.
SolveResult continue_global(const ScalarField& R0, const ScalarField& Q0,
                            const VectorField& u0, double r_star, double q_star,
                            const ClosureParams& params, const PicardConfig& cfg,
                            double horizon_T,
                            const std::optional<Checkpoint>& resume = std::nullopt,
                            std::vector<Checkpoint>* checkpoints = nullptr);

} // namespace bifluid::picard
