#include "bifluid/linear_core.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>
#include <vector>

#include "bifluid/kernels.hpp"

namespace bifluid::linear_core {

namespace {

struct StencilEntry {
    long offset; // 1-d index offset
    double coef;
};

// Row stencils of the second-order first derivative on n nodes with spacing
// h; offsets are relative to the row index. Must stay in lock-step with
// d1_row in grid.cpp.
std::vector<std::vector<StencilEntry>> d1_stencils(std::size_t n, double h,
                                                   Boundary bc) {
    const double c = 1.0 / (2.0 * h);
    std::vector<std::vector<StencilEntry>> rows(n);
    for (std::size_t i = 1; i + 1 < n; ++i)
        rows[i] = {{-1, -c}, {1, c}};
    if (bc == Boundary::periodic) {
        rows[0] = {{static_cast<long>(n) - 1, -c}, {1, c}};
        rows[n - 1] = {{-1, -c}, {-(static_cast<long>(n) - 1), c}};
    } else {
        rows[0] = {{0, -3.0 * c}, {1, 4.0 * c}, {2, -c}};
        rows[n - 1] = {{0, 3.0 * c}, {-1, -4.0 * c}, {-2, c}};
    }
    return rows;
}

// Row stencils of the second derivative; one-sided (or 3-point fallback on a
// minimal row) at Dirichlet boundaries. Matches d2_row in grid.cpp.
std::vector<std::vector<StencilEntry>> d2_stencils(std::size_t n, double h,
                                                   Boundary bc) {
    const double c = 1.0 / (h * h);
    std::vector<std::vector<StencilEntry>> rows(n);
    for (std::size_t i = 1; i + 1 < n; ++i)
        rows[i] = {{-1, c}, {0, -2.0 * c}, {1, c}};
    if (bc == Boundary::periodic) {
        rows[0] = {{static_cast<long>(n) - 1, c}, {0, -2.0 * c}, {1, c}};
        rows[n - 1] = {{-1, c}, {0, -2.0 * c}, {-(static_cast<long>(n) - 1), c}};
    } else if (n >= 4) {
        rows[0] = {{0, 2.0 * c}, {1, -5.0 * c}, {2, 4.0 * c}, {3, -c}};
        rows[n - 1] = {{0, 2.0 * c}, {-1, -5.0 * c}, {-2, 4.0 * c}, {-3, -c}};
    } else {
        rows[0] = {{0, c}, {1, -2.0 * c}, {2, c}};
        rows[n - 1] = {{0, c}, {-1, -2.0 * c}, {-2, c}};
    }
    return rows;
}

SpMat axis_matrix(const Grid& g, int axis,
                  const std::vector<std::vector<StencilEntry>>& rows1d) {
    const std::size_t nx = g.nx(), ny = g.ny(), n = g.num_nodes();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * n);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            std::size_t row = j * nx + i;
            std::size_t along = (axis == 0) ? i : j;
            for (const auto& e : rows1d[along]) {
                long tgt = static_cast<long>(along) + e.offset;
                std::size_t col = (axis == 0)
                                      ? j * nx + static_cast<std::size_t>(tgt)
                                      : static_cast<std::size_t>(tgt) * nx + i;
                trip.emplace_back(static_cast<int>(row), static_cast<int>(col), e.coef);
            }
        }
    SpMat m(static_cast<int>(n), static_cast<int>(n));
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

SpMat diag_matrix(const ScalarField& f) {
    const int n = static_cast<int>(f.size());
    SpMat m(n, n);
    m.reserve(Eigen::VectorXi::Constant(n, 1));
    for (int i = 0; i < n; ++i) m.insert(i, i) = f[static_cast<std::size_t>(i)];
    m.makeCompressed();
    return m;
}

} // namespace

SpMat d1_matrix(const Grid& g, int axis) {
    if (axis == 1 && g.dim() != 2) throw ConfigError("d/dy matrix on a 1-d grid");
    const std::size_t n = (axis == 0) ? g.nx() : g.ny();
    return axis_matrix(g, axis, d1_stencils(n, g.h(axis), g.boundary()));
}

SpMat d2_matrix(const Grid& g, int axis) {
    if (axis == 1 && g.dim() != 2) throw ConfigError("d2/dy2 matrix on a 1-d grid");
    const std::size_t n = (axis == 0) ? g.nx() : g.ny();
    return axis_matrix(g, axis, d2_stencils(n, g.h(axis), g.boundary()));
}

SpMat div_matrix(const Grid& g) {
    const int n = static_cast<int>(g.num_nodes());
    const int d = g.dim();
    SpMat out(n, d * n);
    if (d == 1) {
        out = d1_matrix(g, 0);
        return out;
    }
    SpMat dx = d1_matrix(g, 0), dy = d1_matrix(g, 1);
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < dx.outerSize(); ++k)
        for (SpMat::InnerIterator it(dx, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                              it.value());
    for (int k = 0; k < dy.outerSize(); ++k)
        for (SpMat::InnerIterator it(dy, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()),
                              static_cast<int>(it.col()) + n, it.value());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

SpMat grad_matrix(const Grid& g) {
    const int n = static_cast<int>(g.num_nodes());
    const int d = g.dim();
    SpMat out(d * n, n);
    if (d == 1) return d1_matrix(g, 0);
    SpMat dx = d1_matrix(g, 0), dy = d1_matrix(g, 1);
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < dx.outerSize(); ++k)
        for (SpMat::InnerIterator it(dx, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                              it.value());
    for (int k = 0; k < dy.outerSize(); ++k)
        for (SpMat::InnerIterator it(dy, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()) + n,
                              static_cast<int>(it.col()), it.value());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

SpMat scalar_laplacian_matrix(const Grid& g) {
    SpMat L = d2_matrix(g, 0);
    if (g.dim() == 2) L = L + d2_matrix(g, 1);
    return L;
}

namespace {

SpMat block_diag2(const SpMat& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it) {
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                              it.value());
            trip.emplace_back(static_cast<int>(it.row()) + n,
                              static_cast<int>(it.col()) + n, it.value());
        }
    SpMat out(2 * n, 2 * n);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

void insert_block(std::vector<Eigen::Triplet<double>>& trip, const SpMat& b,
                  int row0, int col0) {
    for (int k = 0; k < b.outerSize(); ++k)
        for (SpMat::InnerIterator it(b, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()) + row0,
                              static_cast<int>(it.col()) + col0, it.value());
}

} // namespace

SpMat vector_laplacian_matrix(const Grid& g) {
    SpMat L = scalar_laplacian_matrix(g);
    return g.dim() == 1 ? L : block_diag2(L);
}

SpMat grad_div_matrix(const Grid& g) {
    if (g.dim() == 1) return d2_matrix(g, 0);
    const int n = static_cast<int>(g.num_nodes());
    SpMat dxx = d2_matrix(g, 0), dyy = d2_matrix(g, 1);
    SpMat dxy = d1_matrix(g, 0) * d1_matrix(g, 1); // dx(dy f), as in ops::dxy
    std::vector<Eigen::Triplet<double>> trip;
    insert_block(trip, dxx, 0, 0);
    insert_block(trip, dxy, 0, n);
    insert_block(trip, dxy, n, 0);
    insert_block(trip, dyy, n, n);
    SpMat out(2 * n, 2 * n);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

SpMat grad_coeff_div_matrix(const Grid& g, const ScalarField& c) {
    return grad_matrix(g) * diag_matrix(c) * div_matrix(g);
}

LinearCoeffs LinearCoeffs::from_frozen(const lagrangian::Frozen& f) {
    LinearCoeffs c;
    c.r0 = f.r0;
    c.q0 = f.q0;
    c.omega1 = f.omega1;
    c.omega2 = f.omega2;
    c.mode = f.is_constant ? lagrangian::RhsMode::around_constant
                           : lagrangian::RhsMode::around_initial;
    return c;
}

void LinearCoeffs::validate(double density_floor) const {
    for (std::size_t i = 0; i < r0.size(); ++i) {
        if (!(r0[i] + q0[i] >= density_floor))
            throw InvariantError("total frozen density fell below the floor");
        if (!(omega1[i] > 0.0) || !(omega2[i] > 0.0))
            throw InvariantError("omega coefficients must be positive");
    }
}

EllipticOperator EllipticOperator::assemble(const LinearCoeffs& coeffs,
                                            const ClosureParams& params,
                                            double dt, double lambda0,
                                            double density_floor) {
    params.validate();
    coeffs.validate(density_floor);
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    const double lambda = 1.0 / dt;
    if (lambda < lambda0)
        throw ConfigError("step refused: 1/dt < lambda0 leaves the resolvent sector");

    EllipticOperator op;
    op.grid_ = coeffs.r0.grid_ptr();
    op.lambda_ = lambda;
    const Grid& g = *op.grid_;
    const int n = static_cast<int>(g.num_nodes());
    const int d = g.dim();

    ScalarField total = coeffs.r0 + coeffs.q0;
    SpMat mass = diag_matrix(total);
    if (d == 2) mass = block_diag2(mass);

    SpMat omega1v = diag_matrix(coeffs.omega1);
    SpMat omega2v = diag_matrix(coeffs.omega2);
    if (d == 2) {
        omega1v = block_diag2(omega1v);
        omega2v = block_diag2(omega2v);
    }

    SpMat A = lambda * mass - params.mu * vector_laplacian_matrix(g) -
              params.nu * grad_div_matrix(g) -
              dt * (omega1v * grad_coeff_div_matrix(g, coeffs.r0) +
                    omega2v * grad_coeff_div_matrix(g, coeffs.q0));

    // Dirichlet rows: identity on boundary velocity dofs.
    if (g.boundary() == Boundary::dirichlet) {
        std::vector<char> is_bdry(static_cast<std::size_t>(d) * g.num_nodes(), 0);
        for (std::size_t b : g.boundary_nodes())
            for (int c = 0; c < d; ++c)
                is_bdry[static_cast<std::size_t>(c) * g.num_nodes() + b] = 1;
        SpMat Ab(A.rows(), A.cols());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(A.nonZeros()));
        for (int k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator it(A, k); it; ++it)
                if (!is_bdry[static_cast<std::size_t>(it.row())])
                    trip.emplace_back(static_cast<int>(it.row()),
                                      static_cast<int>(it.col()), it.value());
        for (int i = 0; i < d * n; ++i)
            if (is_bdry[static_cast<std::size_t>(i)]) trip.emplace_back(i, i, 1.0);
        Ab.setFromTriplets(trip.begin(), trip.end());
        A = std::move(Ab);
    }
    A.makeCompressed();
    op.A_ = std::make_shared<SpMat>(std::move(A));

    if (d == 1) {
        op.lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
        op.lu_->compute(*op.A_);
        if (op.lu_->info() != Eigen::Success)
            throw SolverError("sparse LU factorization of the step operator failed");
    } else {
        op.ilu_ = std::make_shared<
            Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>>();
        op.ilu_->setTolerance(1e-12);
        op.ilu_->setMaxIterations(2000);
        op.ilu_->compute(*op.A_);
        if (op.ilu_->info() != Eigen::Success)
            throw SolverError("ILU preconditioner setup failed");
    }
    return op;
}

Eigen::VectorXd EllipticOperator::solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x;
    if (lu_) {
        x = lu_->solve(rhs);
        if (lu_->info() != Eigen::Success)
            throw SolverError("sparse LU solve failed");
    } else {
        x = ilu_->solve(rhs);
        if (ilu_->info() != Eigen::Success) {
            std::ostringstream msg;
            msg << "iterative velocity solve stagnated, relative residual "
                << ilu_->error();
            throw SolverError(msg.str());
        }
    }
    double denom = rhs.norm();
    double resid = (*A_ * x - rhs).norm() / (denom > 0.0 ? denom : 1.0);
    if (!(resid <= 1e-8)) {
        std::ostringstream msg;
        msg << "velocity solve residual " << resid << " exceeds tolerance";
        throw SolverError(msg.str());
    }
    // Pin exact zeros on the boundary.
    if (grid_->boundary() == Boundary::dirichlet) {
        const auto n = static_cast<Eigen::Index>(grid_->num_nodes());
        for (std::size_t b : grid_->boundary_nodes())
            for (int c = 0; c < grid_->dim(); ++c)
                x[static_cast<Eigen::Index>(c) * n + static_cast<Eigen::Index>(b)] = 0.0;
    }
    return x;
}

void EllipticOperator::dump_matrix(std::ostream& os) const {
    for (int k = 0; k < A_->outerSize(); ++k)
        for (SpMat::InnerIterator it(*A_, k); it; ++it) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", it.value());
            os << it.row() << ' ' << it.col() << ' ' << buf << '\n';
        }
}

Eigen::VectorXd flatten(const VectorField& v) {
    const auto n = static_cast<Eigen::Index>(v.grid().num_nodes());
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.dim()) * n);
    for (int c = 0; c < v.dim(); ++c)
        for (Eigen::Index i = 0; i < n; ++i)
            x[static_cast<Eigen::Index>(c) * n + i] =
                v.comp(c)[static_cast<std::size_t>(i)];
    return x;
}

VectorField unflatten(const Eigen::VectorXd& x, GridPtr g, bool dirichlet) {
    VectorField v(g, dirichlet);
    const auto n = static_cast<Eigen::Index>(g->num_nodes());
    for (int c = 0; c < g->dim(); ++c)
        for (Eigen::Index i = 0; i < n; ++i)
            v.comp(c)[static_cast<std::size_t>(i)] =
                x[static_cast<Eigen::Index>(c) * n + i];
    return v;
}

StepState linear_step(const StepState& state, const lagrangian::RhsBundle& rhs,
                      const LinearCoeffs& coeffs, const EllipticOperator& op) {
    const GridPtr g = state.sigma.grid_ptr();
    check_same_grid(*g, op.grid());
    const double dt = op.dt();
    const auto& k = kernels::ops();

    // Momentum right-hand side of the eliminated system:
    //   (r0+q0) v^n / dt + f3 - omega1 grad(sigma^n + dt f1)
    //                        - omega2 grad(eta^n + dt f2).
    ScalarField s1 = state.sigma;
    add_scaled(s1, dt, rhs.f1);
    ScalarField s2 = state.eta;
    add_scaled(s2, dt, rhs.f2);
    VectorField gs1 = ops::grad(s1);
    VectorField gs2 = ops::grad(s2);

    ScalarField total = coeffs.r0 + coeffs.q0;
    VectorField rhs_v(g, /*dirichlet=*/false);
    for (int c = 0; c < g->dim(); ++c) {
        auto* out = rhs_v.comp(c).data();
        const std::size_t n = g->num_nodes();
        k.mul(total.data(), state.v.comp(c).data(), out, n);
        k.axpby(1.0 / dt, out, 1.0, rhs.f3.comp(c).data(), out, n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] -= coeffs.omega1[i] * gs1.comp(c)[i] +
                      coeffs.omega2[i] * gs2.comp(c)[i];
    }
    if (g->boundary() == Boundary::dirichlet)
        for (std::size_t b : g->boundary_nodes())
            for (int c = 0; c < g->dim(); ++c) rhs_v.comp(c)[b] = 0.0;

    Eigen::VectorXd x = op.solve(flatten(rhs_v));
    StepState next;
    next.v = unflatten(x, g, /*dirichlet=*/true);

    ScalarField divv = ops::divergence(next.v);
    next.sigma = state.sigma;
    next.eta = state.eta;
    const std::size_t n = g->num_nodes();
    for (std::size_t i = 0; i < n; ++i) {
        next.sigma[i] += dt * (rhs.f1[i] - coeffs.r0[i] * divv[i]);
        next.eta[i] += dt * (rhs.f2[i] - coeffs.q0[i] * divv[i]);
    }
    return next;
}

VectorField resolvent_apply(const EllipticOperator& op, const VectorField& f) {
    Eigen::VectorXd rhs = flatten(f);
    if (op.grid().boundary() == Boundary::dirichlet) {
        const auto n = static_cast<Eigen::Index>(op.grid().num_nodes());
        for (std::size_t b : op.grid().boundary_nodes())
            for (int c = 0; c < op.grid().dim(); ++c)
                rhs[static_cast<Eigen::Index>(c) * n + static_cast<Eigen::Index>(b)] = 0.0;
    }
    return unflatten(op.solve(rhs), f.grid_ptr());
}

} // namespace bifluid::linear_core
