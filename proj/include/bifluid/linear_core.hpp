#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <memory>

#include "bifluid/grid.hpp"
#include "bifluid/lagrangian.hpp"

// One implicit Euler step of the linearized system
//
//   sigma_t + r0 div v = f1
//   eta_t   + q0 div v = f2
//   (r0+q0) v_t - mu lap v - nu grad div v + omega1 grad sigma
//                                          + omega2 grad eta = f3,
//   v = 0 on the boundary,
//
// via density elimination: substituting the continuity updates into the
// momentum row turns each step into one elliptic solve for v^{n+1} with the
// resolvent operator at lambda = 1/dt,
//
//   (r0+q0) lambda v - mu lap v - [nu + lambda^{-1}(omega1 r0 + omega2 q0)]
//       grad div v - lambda^{-1} (omega1 grad r0 + omega2 grad q0) div v.
//
// The coefficient-gradient terms (zero in constant mode) are kept implicit
// so that the eliminated step matches the monolithic three-field solve to
// solver precision.

namespace bifluid::linear_core {

using SpMat = Eigen::SparseMatrix<double>;

// Discrete operator building blocks shared with tests and spectra. Velocity
// degrees of freedom are stacked per component: [comp0 nodes..., comp1
// nodes...]. These match the apply-path operators in grid.hpp stencil for
// stencil.
SpMat d1_matrix(const Grid& g, int axis);
SpMat d2_matrix(const Grid& g, int axis);
SpMat div_matrix(const Grid& g);        // N x dN
SpMat grad_matrix(const Grid& g);       // dN x N
SpMat scalar_laplacian_matrix(const Grid& g);
SpMat vector_laplacian_matrix(const Grid& g); // dN x dN, componentwise
SpMat grad_div_matrix(const Grid& g);         // dN x dN, compact stencil
// Composition grad * diag(c) * div used by the elimination coupling.
SpMat grad_coeff_div_matrix(const Grid& g, const ScalarField& c);

struct LinearCoeffs {
    ScalarField r0, q0;
    ScalarField omega1, omega2;
    lagrangian::RhsMode mode = lagrangian::RhsMode::around_initial;

    static LinearCoeffs from_frozen(const lagrangian::Frozen& f);
    // Throws InvariantError when min(r0+q0) < floor or an omega is not positive.
    void validate(double density_floor) const;
};

class EllipticOperator {
public:
    // lambda = 1/dt must satisfy lambda >= lambda0.
    static EllipticOperator assemble(const LinearCoeffs& coeffs,
                                     const ClosureParams& params, double dt,
                                     double lambda0 = 1.0,
                                     double density_floor = 1e-3);

    double lambda() const { return lambda_; }
    double dt() const { return 1.0 / lambda_; }
    const SpMat& matrix() const { return *A_; }
    const Grid& grid() const { return *grid_; }

    // Solve A x = rhs for the velocity dof vector; boundary entries of the
    // result are exact zeros. Throws SolverError with the residual norm on
    // failure.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    // Coordinate text dump "row col value" per line, 0-based.
    void dump_matrix(std::ostream& os) const;

private:
    GridPtr grid_;
    double lambda_ = 0.0;
    // heap-stable: the iterative solver keeps a reference to the matrix, so
    // its address must survive moves of this object
    std::shared_ptr<SpMat> A_;
    std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;                   // d = 1
    std::shared_ptr<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>> ilu_; // d = 2
};

// Flat dof helpers.
Eigen::VectorXd flatten(const VectorField& v);
VectorField unflatten(const Eigen::VectorXd& x, GridPtr g, bool dirichlet = true);

struct StepState {
    ScalarField sigma, eta;
    VectorField v;
};

// One implicit Euler step. v^{n+1} from the eliminated elliptic solve, then
//   sigma^{n+1} = sigma^n + dt (f1 - r0 div v^{n+1}),
//   eta^{n+1}   = eta^n   + dt (f2 - q0 div v^{n+1}).
StepState linear_step(const StepState& state, const lagrangian::RhsBundle& rhs,
                      const LinearCoeffs& coeffs, const EllipticOperator& op);

// v = C(lambda) f for the assembled operator; f enters the momentum row only.
VectorField resolvent_apply(const EllipticOperator& op, const VectorField& f);

} // namespace bifluid::linear_core
