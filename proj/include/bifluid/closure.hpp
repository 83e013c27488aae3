#pragma once

#include <optional>

#include "bifluid/errors.hpp"
#include "bifluid/grid.hpp"

// Implicit algebraic closure shared by both phases: given partial densities
// (R, Q), find Z > 0 with
//
//     (1 - R/Z) Z^gamma = Q,   gamma = gamma_plus / gamma_minus,  R <= Z,
//
// then p = Z^{gamma_plus}, alpha = R/Z. All helpers here are pure functions
// and safe to call concurrently.

namespace bifluid {

struct ClosureParams {
    double gamma_plus = 3.0;
    double gamma_minus = 1.5;
    double mu = 1.0;
    double nu = 0.0;

    double gamma() const { return gamma_plus / gamma_minus; }

    // gamma_plus >= gamma_minus > 1; parabolicity needs mu > 0, mu + nu > 0.
    void validate() const;
};

struct PhasePoint {
    double R = 0.0;
    double Q = 0.0;
    double Z = 0.0;
    double alpha = 0.0;      // R / Z
    double rho_plus = 0.0;   // = Z
    double rho_minus = 0.0;  // Q / (1 - alpha), meaningless if minus_vacuum
    double p = 0.0;          // Z^{gamma_plus}
    bool minus_vacuum = false;
};

struct ZBracket {
    double lo = 0.0;
    double hi = 0.0;
};

// Bracket guaranteed to contain the root: [max(R, min(k/2, (k/2)^gamma)),
// max((2Q)^{1/gamma}, 2R)] with k = R + Q.
ZBracket z_bracket(double R, double Q, const ClosureParams& params);

// Safeguarded Newton with bisection fallback on G(Z) = Z^gamma - R Z^{gamma-1} - Q,
// monotone on [R, infinity). Throws ConfigError for negative input or total
// vacuum, SolverError (with the last bracket in the message) on budget
// exhaustion.
double solve_z(double R, double Q, const ClosureParams& params,
               double tol = 1e-12, int max_iter = 100);

// (dZ/dR, dZ/dQ) by implicit differentiation of the closure.
struct ClosureDerivs {
    double dZ_dR = 0.0;
    double dZ_dQ = 0.0;
};
ClosureDerivs closure_derivatives(double Z, double R, const ClosureParams& params);

// omega1 = Z^{gamma_plus} / (gamma Z - (gamma-1) R),
// omega2 = Z^{gamma_plus} / (gamma Z^gamma - (gamma-1) R Z^{gamma-1}).
struct OmegaCoeffs {
    double omega1 = 0.0;
    double omega2 = 0.0;
};
OmegaCoeffs omega_coefficients(double Z, double R, const ClosureParams& params);

PhasePoint recover_phases(double R, double Q, double Z, const ClosureParams& params,
                          double tol = 1e-9);

// Nodewise solve over fields; fills optional omega fields when given.
ScalarField solve_z_field(const ScalarField& R, const ScalarField& Q,
                          const ClosureParams& params, double tol = 1e-12,
                          ScalarField* omega1 = nullptr,
                          ScalarField* omega2 = nullptr);

} // namespace bifluid
