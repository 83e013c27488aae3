#pragma once

#include <array>
#include <utility>

#include "bifluid/closure.hpp"
#include "bifluid/grid.hpp"

// Flow-map bookkeeping in Lagrangian coordinates x = y + int_0^t v ds and
// the nonlinear right-hand sides of the transformed system: the inverse
// Jacobian correction V0(k) = (I+k)^{-1} - I, the second/first-order
// correction tensors for Laplacian and grad-div, the transport corrections
// O1, O2, the momentum correction O3, and the linearization residuals
// (f1,f2,f3) around frozen fields or (g1,g2,g3) around constants.

namespace bifluid::lagrangian {

// Tiny dense d x d matrix, d <= 2, row-major.
struct SmallMat {
    int d = 1;
    std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};

    static SmallMat zero(int d) { return SmallMat{d, {0, 0, 0, 0}}; }
    static SmallMat identity(int d);
    double& at(int i, int j) { return a[static_cast<std::size_t>(i * d + j)]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i * d + j)]; }
};

SmallMat operator+(const SmallMat& x, const SmallMat& y);
SmallMat operator-(const SmallMat& x, const SmallMat& y);
SmallMat operator*(const SmallMat& x, const SmallMat& y);
SmallMat operator*(double s, const SmallMat& x);
double inf_norm(const SmallMat& m); // max absolute row sum
SmallMat inverse(const SmallMat& m);
SmallMat transpose(const SmallMat& m);
// Frobenius-style contraction sum_ij x_ij y_ij.
double contract(const SmallMat& x, const SmallMat& y);

// V0(k) = (I + k)^{-1} - I. Throws InvariantError if |k| >= delta or I + k
// is singular.
SmallMat v0_matrix(const SmallMat& k, double delta);

// Directional derivative of V0 at k in direction M:
// DV0(k)[M] = -(I+k)^{-1} M (I+k)^{-1}.
SmallMat dv0_apply(const SmallMat& inv_i_plus_k, const SmallMat& M);

// d x d matrix of scalar fields; component (i,j) stored at index i*d+j.
class MatrixField {
public:
    MatrixField() = default;
    explicit MatrixField(GridPtr g);
    int dim() const { return d_; }
    const Grid& grid() const { return *grid_; }
    ScalarField& comp(int i, int j) { return c_[static_cast<std::size_t>(i * d_ + j)]; }
    const ScalarField& comp(int i, int j) const {
        return c_[static_cast<std::size_t>(i * d_ + j)];
    }
    SmallMat at(std::size_t node) const;
    void set(std::size_t node, const SmallMat& m);

private:
    GridPtr grid_;
    int d_ = 1;
    std::array<ScalarField, 4> c_;
};

// Rank-3 field T[l](a,b) = d_l d_b v_a (and its time integral in FlowHistory).
class Tensor3Field {
public:
    Tensor3Field() = default;
    explicit Tensor3Field(GridPtr g);
    int dim() const { return d_; }
    MatrixField& slice(int l) { return s_[static_cast<std::size_t>(l)]; }
    const MatrixField& slice(int l) const { return s_[static_cast<std::size_t>(l)]; }

private:
    int d_ = 1;
    std::array<MatrixField, 2> s_;
};

// (grad v)_{ab} = d v_a / d y_b, nodewise.
MatrixField velocity_gradient(const VectorField& v);
// hessian[l](a,b) = d^2 v_a / (d y_l d y_b).
Tensor3Field velocity_hessian(const VectorField& v);

// Accumulated flow-map history. k = int_0^t grad v ds, k2 = its spatial
// gradient, both advanced with the trapezoid rule in time. advance() throws
// InvariantError once the integral of |grad v|_inf exceeds the budget delta.
class FlowHistory {
public:
    FlowHistory() = default;
    FlowHistory(GridPtr g, double delta);

    // Rebuild from checkpointed accumulators.
    static FlowHistory restore(GridPtr g, double delta, MatrixField k,
                               Tensor3Field k2, double budget_used);

    void advance(const VectorField& v_old, const VectorField& v_new, double dt);

    const MatrixField& k() const { return k_; }
    const Tensor3Field& k2() const { return k2_; }
    double delta_budget() const { return delta_; }
    double grad_linf_integral() const { return budget_used_; }

    // det(I + k) at a node (Jacobian of the flow map).
    double jacobian(std::size_t node) const;

private:
    GridPtr grid_;
    MatrixField k_;
    Tensor3Field k2_;
    double delta_ = 0.1;
    double budget_used_ = 0.0;
};

struct StateView {
    const ScalarField& r;
    const ScalarField& q;
    const VectorField& v;
};

// Linearization point: smooth frozen fields (local mode) or constants
// (global mode). zeta0 solves the closure at (r0, q0).
struct Frozen {
    ScalarField r0, q0, zeta0;
    ScalarField omega1, omega2;
    VectorField grad_r0, grad_q0;
    bool is_constant = false;

    static Frozen from_fields(const ScalarField& r0, const ScalarField& q0,
                              const ClosureParams& params, double tol = 1e-12);
    static Frozen from_constants(GridPtr g, double r_star, double q_star,
                                 const ClosureParams& params, double tol = 1e-12);
};

enum class RhsMode { around_initial, around_constant };

struct RhsBundle {
    ScalarField f1, f2;
    VectorField f3;
    RhsMode mode = RhsMode::around_initial;
};

// O1 = -r sum_ij V0_ij(k) dv_i/dy_j,  O2 likewise with q.
std::pair<ScalarField, ScalarField> transport_rhs(const StateView& state,
                                                  const FlowHistory& history);

// O3 = mu A2lap grad^2 v + mu A1lap grad v + nu A2div grad^2 v
//    + nu A1div grad v - omega1(zeta) V0 grad r - omega2(zeta) V0 grad q.
VectorField momentum_correction(const StateView& state, const FlowHistory& history,
                                const ClosureParams& params,
                                double closure_tol = 1e-12);

// f1 = O1 - sigma div v, f2 = O2 - eta div v,
// f3 = O3 - (sigma+eta) v_t - I1 - I2 - I3 - I4 with the four pressure
// linearization fractions assembled termwise. v_t is the backward time
// difference of the two latest velocity snapshots.
RhsBundle rhs_local(const StateView& state, const FlowHistory& history,
                    const Frozen& frozen, const VectorField& v_t,
                    const ClosureParams& params, double closure_tol = 1e-12);

// Constant-state variant: J1, J2, J3 and no grad r0 / grad q0 term.
RhsBundle rhs_global(const StateView& state, const FlowHistory& history,
                     const Frozen& frozen, const VectorField& v_t,
                     const ClosureParams& params, double closure_tol = 1e-12);

} // namespace bifluid::lagrangian
