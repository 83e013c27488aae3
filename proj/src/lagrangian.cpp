#include "bifluid/lagrangian.hpp"

#include <cmath>

namespace bifluid::lagrangian {

SmallMat SmallMat::identity(int d) {
    SmallMat m = zero(d);
    for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
    return m;
}

SmallMat operator+(const SmallMat& x, const SmallMat& y) {
    SmallMat out = x;
    for (int i = 0; i < x.d * x.d; ++i)
        out.a[static_cast<std::size_t>(i)] += y.a[static_cast<std::size_t>(i)];
    return out;
}

SmallMat operator-(const SmallMat& x, const SmallMat& y) {
    SmallMat out = x;
    for (int i = 0; i < x.d * x.d; ++i)
        out.a[static_cast<std::size_t>(i)] -= y.a[static_cast<std::size_t>(i)];
    return out;
}

SmallMat operator*(const SmallMat& x, const SmallMat& y) {
    SmallMat out = SmallMat::zero(x.d);
    for (int i = 0; i < x.d; ++i)
        for (int j = 0; j < x.d; ++j) {
            double s = 0.0;
            for (int k = 0; k < x.d; ++k) s += x.at(i, k) * y.at(k, j);
            out.at(i, j) = s;
        }
    return out;
}

SmallMat operator*(double s, const SmallMat& x) {
    SmallMat out = x;
    for (auto& v : out.a) v *= s;
    return out;
}

double inf_norm(const SmallMat& m) {
    double best = 0.0;
    for (int i = 0; i < m.d; ++i) {
        double row = 0.0;
        for (int j = 0; j < m.d; ++j) row += std::fabs(m.at(i, j));
        best = std::max(best, row);
    }
    return best;
}

SmallMat inverse(const SmallMat& m) {
    if (m.d == 1) {
        if (m.at(0, 0) == 0.0) throw InvariantError("singular 1x1 matrix");
        SmallMat out = SmallMat::zero(1);
        out.at(0, 0) = 1.0 / m.at(0, 0);
        return out;
    }
    double det = m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
    if (det == 0.0) throw InvariantError("singular 2x2 matrix");
    SmallMat out = SmallMat::zero(2);
    out.at(0, 0) = m.at(1, 1) / det;
    out.at(0, 1) = -m.at(0, 1) / det;
    out.at(1, 0) = -m.at(1, 0) / det;
    out.at(1, 1) = m.at(0, 0) / det;
    return out;
}

SmallMat transpose(const SmallMat& m) {
    SmallMat out = SmallMat::zero(m.d);
    for (int i = 0; i < m.d; ++i)
        for (int j = 0; j < m.d; ++j) out.at(i, j) = m.at(j, i);
    return out;
}

double contract(const SmallMat& x, const SmallMat& y) {
    double s = 0.0;
    for (int i = 0; i < x.d * x.d; ++i)
        s += x.a[static_cast<std::size_t>(i)] * y.a[static_cast<std::size_t>(i)];
    return s;
}

SmallMat v0_matrix(const SmallMat& k, double delta) {
    if (!(inf_norm(k) < delta))
        throw InvariantError("flow-map increment |k| exceeds the smallness budget");
    SmallMat ipk = SmallMat::identity(k.d) + k;
    return inverse(ipk) - SmallMat::identity(k.d);
}

SmallMat dv0_apply(const SmallMat& inv_i_plus_k, const SmallMat& M) {
    return -1.0 * (inv_i_plus_k * M * inv_i_plus_k);
}

MatrixField::MatrixField(GridPtr g) : grid_(g), d_(g->dim()) {
    for (int i = 0; i < d_ * d_; ++i)
        c_[static_cast<std::size_t>(i)] = ScalarField(g);
}

SmallMat MatrixField::at(std::size_t node) const {
    SmallMat m = SmallMat::zero(d_);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) m.at(i, j) = comp(i, j)[node];
    return m;
}

void MatrixField::set(std::size_t node, const SmallMat& m) {
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) comp(i, j)[node] = m.at(i, j);
}

Tensor3Field::Tensor3Field(GridPtr g) : d_(g->dim()) {
    for (int l = 0; l < d_; ++l) s_[static_cast<std::size_t>(l)] = MatrixField(g);
}

MatrixField velocity_gradient(const VectorField& v) {
    MatrixField g(v.grid_ptr());
    for (int a = 0; a < v.dim(); ++a)
        for (int b = 0; b < v.dim(); ++b) g.comp(a, b) = ops::d1(v.comp(a), b);
    return g;
}

Tensor3Field velocity_hessian(const VectorField& v) {
    const int d = v.dim();
    Tensor3Field t(v.grid_ptr());
    for (int a = 0; a < d; ++a) {
        ScalarField vxx = ops::d2(v.comp(a), 0);
        t.slice(0).comp(a, 0) = vxx;
        if (d == 2) {
            ScalarField vyy = ops::d2(v.comp(a), 1);
            ScalarField vxy = ops::dxy(v.comp(a));
            t.slice(0).comp(a, 1) = vxy;
            t.slice(1).comp(a, 0) = vxy;
            t.slice(1).comp(a, 1) = vyy;
        }
    }
    return t;
}

namespace {

double grad_inf_norm(const MatrixField& g) {
    double best = 0.0;
    const std::size_t n = g.grid().num_nodes();
    for (std::size_t node = 0; node < n; ++node)
        best = std::max(best, inf_norm(g.at(node)));
    return best;
}

} // namespace

FlowHistory::FlowHistory(GridPtr g, double delta)
    : grid_(g), k_(g), k2_(g), delta_(delta) {
    if (!(delta > 0.0)) throw ConfigError("smallness budget delta must be positive");
}

FlowHistory FlowHistory::restore(GridPtr g, double delta, MatrixField k,
                                 Tensor3Field k2, double budget_used) {
    FlowHistory h(g, delta);
    h.k_ = std::move(k);
    h.k2_ = std::move(k2);
    h.budget_used_ = budget_used;
    return h;
}

void FlowHistory::advance(const VectorField& v_old, const VectorField& v_new,
                          double dt) {
    MatrixField g_old = velocity_gradient(v_old);
    MatrixField g_new = velocity_gradient(v_new);
    budget_used_ += 0.5 * dt * (grad_inf_norm(g_old) + grad_inf_norm(g_new));
    if (budget_used_ > delta_)
        throw InvariantError(
            "smallness budget exceeded: int |grad v|_inf = " +
            std::to_string(budget_used_) + " > delta = " + std::to_string(delta_));

    const int d = grid_->dim();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            add_scaled(k_.comp(i, j), 0.5 * dt, g_old.comp(i, j));
            add_scaled(k_.comp(i, j), 0.5 * dt, g_new.comp(i, j));
        }
    Tensor3Field h_old = velocity_hessian(v_old);
    Tensor3Field h_new = velocity_hessian(v_new);
    for (int l = 0; l < d; ++l)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                add_scaled(k2_.slice(l).comp(i, j), 0.5 * dt, h_old.slice(l).comp(i, j));
                add_scaled(k2_.slice(l).comp(i, j), 0.5 * dt, h_new.slice(l).comp(i, j));
            }
}

double FlowHistory::jacobian(std::size_t node) const {
    SmallMat m = SmallMat::identity(grid_->dim()) + k_.at(node);
    if (m.d == 1) return m.at(0, 0);
    return m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
}

Frozen Frozen::from_fields(const ScalarField& r0, const ScalarField& q0,
                           const ClosureParams& params, double tol) {
    Frozen f;
    f.r0 = r0;
    f.q0 = q0;
    f.zeta0 = solve_z_field(r0, q0, params, tol, &f.omega1, &f.omega2);
    f.grad_r0 = ops::grad(r0);
    f.grad_q0 = ops::grad(q0);
    f.is_constant = false;
    return f;
}

Frozen Frozen::from_constants(GridPtr g, double r_star, double q_star,
                              const ClosureParams& params, double tol) {
    Frozen f;
    f.r0 = ScalarField(g, r_star);
    f.q0 = ScalarField(g, q_star);
    double z = solve_z(r_star, q_star, params, tol);
    f.zeta0 = ScalarField(g, z);
    OmegaCoeffs w = omega_coefficients(z, r_star, params);
    f.omega1 = ScalarField(g, w.omega1);
    f.omega2 = ScalarField(g, w.omega2);
    f.grad_r0 = VectorField(g, /*dirichlet=*/false);
    f.grad_q0 = VectorField(g, /*dirichlet=*/false);
    f.is_constant = true;
    return f;
}

std::pair<ScalarField, ScalarField> transport_rhs(const StateView& state,
                                                  const FlowHistory& history) {
    check_same_grid(state.r.grid(), history.k().grid());
    MatrixField gradv = velocity_gradient(state.v);
    ScalarField O1(state.r.grid_ptr()), O2(state.r.grid_ptr());
    const std::size_t n = state.r.size();
    const double delta = history.delta_budget();
    for (std::size_t node = 0; node < n; ++node) {
        SmallMat v0 = v0_matrix(history.k().at(node), delta);
        double s = contract(v0, gradv.at(node));
        O1[node] = -state.r[node] * s;
        O2[node] = -state.q[node] * s;
    }
    return {std::move(O1), std::move(O2)};
}

VectorField momentum_correction(const StateView& state, const FlowHistory& history,
                                const ClosureParams& params, double closure_tol) {
    const GridPtr g = state.r.grid_ptr();
    const int d = g->dim();
    const double delta = history.delta_budget();

    MatrixField gradv = velocity_gradient(state.v);
    Tensor3Field hess = velocity_hessian(state.v);
    VectorField grad_r = ops::grad(state.r);
    VectorField grad_q = ops::grad(state.q);

    VectorField O3(g, /*dirichlet=*/false);
    const std::size_t n = g->num_nodes();
    for (std::size_t node = 0; node < n; ++node) {
        SmallMat k = history.k().at(node);
        if (!(inf_norm(k) < delta))
            throw InvariantError("flow-map increment |k| exceeds the smallness budget");
        SmallMat inv_ipk = inverse(SmallMat::identity(d) + k);
        SmallMat v0 = inv_ipk - SmallMat::identity(d);

        // DV0(k)[K2_l] per direction l.
        std::array<SmallMat, 2> D;
        for (int l = 0; l < d; ++l)
            D[static_cast<std::size_t>(l)] =
                dv0_apply(inv_ipk, history.k2().slice(l).at(node));

        // A2lap contraction weights: W = 2 V0 + V0^T V0, applied to the
        // Hessian of each velocity component.
        SmallMat W = 2.0 * v0 + transpose(v0) * v0;

        // A1lap covector c_m = sum_l D_l[l,m] + sum_{k,l} V0_{kl} D_l[k,m].
        std::array<double, 2> c{0.0, 0.0};
        for (int m = 0; m < d; ++m) {
            double s = 0.0;
            for (int l = 0; l < d; ++l) s += D[static_cast<std::size_t>(l)].at(l, m);
            for (int kk = 0; kk < d; ++kk)
                for (int l = 0; l < d; ++l)
                    s += v0.at(kk, l) * D[static_cast<std::size_t>(l)].at(kk, m);
            c[static_cast<std::size_t>(m)] = s;
        }

        double zeta = solve_z(state.r[node], state.q[node], params, closure_tol);
        OmegaCoeffs w = omega_coefficients(zeta, state.r[node], params);

        auto H = [&](int a, int l, int m) {
            return hess.slice(l).at(node).at(a, m);
        };

        for (int j = 0; j < d; ++j) {
            // mu (A2lap grad^2 v + A1lap grad v), acting on component j
            double a2lap = 0.0;
            for (int l = 0; l < d; ++l)
                for (int m = 0; m < d; ++m) a2lap += W.at(l, m) * H(j, l, m);
            double a1lap = 0.0;
            for (int m = 0; m < d; ++m)
                a1lap += c[static_cast<std::size_t>(m)] * gradv.at(node).at(j, m);

            // nu (A2div_j grad^2 v + A1div_j grad v)
            double a2div = 0.0;
            for (int l = 0; l < d; ++l)
                for (int m = 0; m < d; ++m) a2div += v0.at(l, m) * H(l, m, j);
            for (int kk = 0; kk < d; ++kk) {
                double div_k = 0.0;
                for (int l = 0; l < d; ++l) div_k += H(l, kk, l);
                a2div += v0.at(j, kk) * div_k;
            }
            for (int kk = 0; kk < d; ++kk)
                for (int l = 0; l < d; ++l)
                    for (int m = 0; m < d; ++m)
                        a2div += v0.at(j, kk) * v0.at(l, m) * H(l, kk, m);
            double a1div = contract(D[static_cast<std::size_t>(j)], gradv.at(node));
            for (int kk = 0; kk < d; ++kk)
                a1div += v0.at(j, kk) *
                         contract(D[static_cast<std::size_t>(kk)], gradv.at(node));

            // pressure part: -omega1(zeta) (V0 grad r)_j - omega2(zeta) (V0 grad q)_j
            double press = 0.0;
            for (int m = 0; m < d; ++m)
                press += v0.at(j, m) * (w.omega1 * grad_r.comp(m)[node] +
                                        w.omega2 * grad_q.comp(m)[node]);

            O3.comp(j)[node] = params.mu * (a2lap + a1lap) +
                               params.nu * (a2div + a1div) - press;
        }
    }
    return O3;
}

namespace {

struct PressureTerms {
    double coef_sigma; // multiplies grad sigma
    double coef_eta;   // multiplies grad eta
    double omega1_state, omega2_state;
};

// The three linearization fractions of the momentum right-hand side,
// assembled termwise with numerators and denominators kept as separate
// factors.
PressureTerms pressure_fractions(double r, double zeta, double r0,
                                 double zeta0, const ClosureParams& params) {
    const double g = params.gamma();
    const double gp = params.gamma_plus;

    const double z_gp = std::pow(zeta, gp);
    const double z0_gp = std::pow(zeta0, gp);
    const double z_g = std::pow(zeta, g);
    const double z0_g = std::pow(zeta0, g);
    const double z_gm1 = std::pow(zeta, g - 1.0);
    const double z0_gm1 = std::pow(zeta0, g - 1.0);

    const double den1_state = g * zeta - (g - 1.0) * r;
    const double den1_frozen = g * zeta0 - (g - 1.0) * r0;
    const double den2_state = g * z_g - (g - 1.0) * r * z_gm1;
    const double den2_frozen = g * z0_g - (g - 1.0) * r0 * z0_gm1;

    const double slack = 1.0 - 1e-10;
    if (!(den1_state >= zeta * slack) || !(den1_frozen >= zeta0 * slack) ||
        !(den2_state >= z_g * slack) || !(den2_frozen >= z0_g * slack))
        throw InvariantError("pressure-term denominator fell below its analytic bound");

    PressureTerms out{};
    // I1 numerator over (den1_frozen * den1_state)
    const double num1 = g * (zeta0 * (z_gp - z0_gp) + z0_gp * (zeta0 - zeta)) +
                        (g - 1.0) * (z0_gp * (r - r0) + r0 * (z0_gp - z_gp));
    out.coef_sigma = num1 / (den1_frozen * den1_state);

    // I2 + I3 numerators over (den2_state * den2_frozen)
    const double num2 = g * (z0_gp * (z0_g - z_g) + z0_g * (z_gp - z0_gp));
    const double num3 =
        (g - 1.0) * (r * z0_gp * (z_gm1 - z0_gm1) + z0_gp * z0_gm1 * (r - r0) +
                     r0 * z0_gm1 * (z0_gp - z_gp));
    out.coef_eta = (num2 + num3) / (den2_state * den2_frozen);

    out.omega1_state = z_gp / den1_state;
    out.omega2_state = z_gp / den2_state;
    return out;
}

RhsBundle assemble_rhs(const StateView& state, const FlowHistory& history,
                       const Frozen& frozen, const VectorField& v_t,
                       const ClosureParams& params, double closure_tol,
                       RhsMode mode) {
    const GridPtr g = state.r.grid_ptr();
    check_same_grid(*g, frozen.r0.grid());

    auto [O1, O2] = transport_rhs(state, history);
    VectorField O3 = momentum_correction(state, history, params, closure_tol);

    ScalarField sigma = state.r - frozen.r0;
    ScalarField eta = state.q - frozen.q0;
    ScalarField divv = ops::divergence(state.v);
    VectorField grad_sigma = ops::grad(sigma);
    VectorField grad_eta = ops::grad(eta);

    RhsBundle out;
    out.mode = mode;
    out.f1 = ScalarField(g);
    out.f2 = ScalarField(g);
    out.f3 = VectorField(g, /*dirichlet=*/false);

    const std::size_t n = g->num_nodes();
    const int d = g->dim();
    for (std::size_t node = 0; node < n; ++node) {
        out.f1[node] = O1[node] - sigma[node] * divv[node];
        out.f2[node] = O2[node] - eta[node] * divv[node];

        double zeta = solve_z(state.r[node], state.q[node], params, closure_tol);
        PressureTerms pt = pressure_fractions(
            state.r[node], zeta, frozen.r0[node], frozen.zeta0[node], params);
        for (int j = 0; j < d; ++j) {
            double val = O3.comp(j)[node] -
                         (sigma[node] + eta[node]) * v_t.comp(j)[node];
            val -= pt.coef_sigma * grad_sigma.comp(j)[node];
            val -= pt.coef_eta * grad_eta.comp(j)[node];
            if (mode == RhsMode::around_initial)
                val -= pt.omega1_state * frozen.grad_r0.comp(j)[node] +
                       pt.omega2_state * frozen.grad_q0.comp(j)[node];
            out.f3.comp(j)[node] = val;
        }
    }
    return out;
}

} // namespace

RhsBundle rhs_local(const StateView& state, const FlowHistory& history,
                    const Frozen& frozen, const VectorField& v_t,
                    const ClosureParams& params, double closure_tol) {
    return assemble_rhs(state, history, frozen, v_t, params, closure_tol,
                        RhsMode::around_initial);
}

RhsBundle rhs_global(const StateView& state, const FlowHistory& history,
                     const Frozen& frozen, const VectorField& v_t,
                     const ClosureParams& params, double closure_tol) {
    if (!frozen.is_constant)
        throw ConfigError("rhs_global requires a constant linearization state");
    return assemble_rhs(state, history, frozen, v_t, params, closure_tol,
                        RhsMode::around_constant);
}

} // namespace bifluid::lagrangian
