#include "bifluid/spectra.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bifluid/linear_core.hpp"

namespace bifluid::spectra {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<std::complex<double>>;
using VecC = Eigen::VectorXcd;

ConstantCoeffs ConstantCoeffs::from_state(double r_star, double q_star,
                                          const ClosureParams& params,
                                          double closure_tol) {
    double z = solve_z(r_star, q_star, params, closure_tol);
    OmegaCoeffs w = omega_coefficients(z, r_star, params);
    return {r_star, q_star, w.omega1, w.omega2};
}

bool SectorSpec::contains(std::complex<double> lambda) const {
    return std::abs(std::arg(lambda)) <= std::numbers::pi - epsilon + 1e-12 &&
           std::abs(lambda) >= lambda0 * (1.0 - 1e-12);
}

std::vector<std::complex<double>> SectorSpec::samples() const {
    if (!(epsilon > 0.0) || !(epsilon < std::numbers::pi / 2.0))
        throw ConfigError("sector angle must lie in (0, pi/2)");
    if (!(lambda0 > 0.0)) throw ConfigError("sector radius lambda0 must be positive");
    std::vector<std::complex<double>> out;
    out.reserve(n_radii * n_rays);
    for (std::size_t i = 0; i < n_radii; ++i) {
        double f = n_radii > 1 ? static_cast<double>(i) / (n_radii - 1) : 0.0;
        double radius = lambda0 * std::pow(max_radius / lambda0, f);
        for (std::size_t j = 0; j < n_rays; ++j) {
            double fr = n_rays > 1 ? static_cast<double>(j) / (n_rays - 1) : 0.5;
            double theta = (2.0 * fr - 1.0) * (std::numbers::pi - epsilon);
            std::complex<double> lambda = std::polar(radius, theta);
            if (!contains(lambda))
                throw InvariantError("sector sample fell outside Lambda_{eps,lambda0}");
            out.push_back(lambda);
        }
    }
    return out;
}

namespace {

SpMatC to_complex(const SpMat& m) {
    return m.cast<std::complex<double>>();
}

// A(lambda) = lambda (r*+q*) I - mu L - nu GD - lambda^{-1} (w1 r* + w2 q*) G D,
// Dirichlet rows on boundary velocity dofs.
SpMatC assemble_resolvent(const ConstantCoeffs& cc, const ClosureParams& params,
                          const Grid& g, std::complex<double> lambda) {
    const int d = g.dim();
    const auto n = static_cast<int>(g.num_nodes());
    ScalarField ones(std::make_shared<Grid>(g), 1.0);
    SpMat L = linear_core::vector_laplacian_matrix(g);
    SpMat GD = linear_core::grad_div_matrix(g);
    SpMat GcD = linear_core::grad_coeff_div_matrix(g, ones);

    const double mass = cc.r_star + cc.q_star;
    const double wbar = cc.omega1 * cc.r_star + cc.omega2 * cc.q_star;

    SpMatC A = to_complex(-params.mu * L - params.nu * GD);
    A = A - (wbar / lambda) * to_complex(GcD);
    SpMatC ident(d * n, d * n);
    ident.setIdentity();
    A = A + (lambda * mass) * ident;

    if (g.boundary() == Boundary::dirichlet) {
        std::vector<char> is_bdry(static_cast<std::size_t>(d) * g.num_nodes(), 0);
        for (std::size_t b : g.boundary_nodes())
            for (int c = 0; c < d; ++c)
                is_bdry[static_cast<std::size_t>(c) * g.num_nodes() + b] = 1;
        std::vector<Eigen::Triplet<std::complex<double>>> trip;
        for (int k = 0; k < A.outerSize(); ++k)
            for (SpMatC::InnerIterator it(A, k); it; ++it)
                if (!is_bdry[static_cast<std::size_t>(it.row())])
                    trip.emplace_back(static_cast<int>(it.row()),
                                      static_cast<int>(it.col()), it.value());
        for (int i = 0; i < d * n; ++i)
            if (is_bdry[static_cast<std::size_t>(i)])
                trip.emplace_back(i, i, std::complex<double>(1.0, 0.0));
        SpMatC Ab(d * n, d * n);
        Ab.setFromTriplets(trip.begin(), trip.end());
        A = std::move(Ab);
    }
    A.makeCompressed();
    return A;
}

// First- and second-derivative jet matrices used as the grad / grad^2
// factors in the norm proxies.
SpMat jet1(const Grid& g) {
    const int n = static_cast<int>(g.num_nodes());
    const int d = g.dim();
    SpMat dxm = linear_core::d1_matrix(g, 0);
    if (d == 1) return dxm;
    SpMat dym = linear_core::d1_matrix(g, 1);
    std::vector<Eigen::Triplet<double>> trip;
    auto put = [&](const SpMat& b, int r0, int c0) {
        for (int k = 0; k < b.outerSize(); ++k)
            for (SpMat::InnerIterator it(b, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()) + r0,
                                  static_cast<int>(it.col()) + c0, it.value());
    };
    put(dxm, 0, 0);
    put(dym, n, 0);
    put(dxm, 2 * n, n);
    put(dym, 3 * n, n);
    SpMat out(4 * n, 2 * n);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

SpMat jet2(const Grid& g) {
    const int n = static_cast<int>(g.num_nodes());
    const int d = g.dim();
    SpMat dxx = linear_core::d2_matrix(g, 0);
    if (d == 1) return dxx;
    SpMat dyy = linear_core::d2_matrix(g, 1);
    SpMat dxy = linear_core::d1_matrix(g, 0) * linear_core::d1_matrix(g, 1);
    std::vector<Eigen::Triplet<double>> trip;
    auto put = [&](const SpMat& b, int r0, int c0) {
        for (int k = 0; k < b.outerSize(); ++k)
            for (SpMat::InnerIterator it(b, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()) + r0,
                                  static_cast<int>(it.col()) + c0, it.value());
    };
    put(dxx, 0, 0);
    put(dxy, n, 0);
    put(dyy, 2 * n, 0);
    put(dxx, 3 * n, n);
    put(dxy, 4 * n, n);
    put(dyy, 5 * n, n);
    SpMat out(6 * n, 2 * n);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

// Largest singular value of S A^{-1} restricted to the interior subspace,
// by power iteration on (S B)^* (S B). The Dirichlet identity rows would
// otherwise contribute a spurious unit singular value.
double operator_norm(const Eigen::SparseLU<SpMatC>& lu,
                     const Eigen::SparseLU<SpMatC>& lu_adj, const SpMatC* S,
                     const std::vector<char>& bdry_mask, Eigen::Index dim,
                     const PowerIterOptions& opts, std::uint64_t salt) {
    std::mt19937_64 rng(opts.seed ^ (salt * 0x9e3779b97f4a7c15ULL));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto project = [&](VecC& w) {
        for (Eigen::Index i = 0; i < dim; ++i)
            if (bdry_mask[static_cast<std::size_t>(i)]) w[i] = 0.0;
    };
    VecC x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) x[i] = {u(rng), u(rng)};
    project(x);
    x /= x.norm();

    double est = 0.0, prev = -1.0;
    for (int it = 0; it < opts.max_iter; ++it) {
        VecC y = lu.solve(x);
        VecC sy = S ? VecC(*S * y) : y;
        est = sy.norm();
        VecC z = S ? VecC(S->adjoint() * sy) : sy;
        VecC xn = lu_adj.solve(z);
        project(xn);
        double nx = xn.norm();
        if (!(nx > 0.0)) break;
        x = xn / nx;
        if (prev > 0.0 && std::fabs(est - prev) <= opts.tol * est) break;
        prev = est;
    }
    return est;
}

} // namespace

SweepResult sweep_sector(const ConstantCoeffs& cc, const ClosureParams& params,
                         const Grid& grid, const SectorSpec& sector,
                         const PowerIterOptions& opts) {
    params.validate();
    if (!(cc.omega1 > 0.0) || !(cc.omega2 > 0.0))
        throw ConfigError("constant coefficients must have positive omegas");

    SpMat j1 = jet1(grid), j2 = jet2(grid);
    SpMatC j1c = to_complex(j1), j2c = to_complex(j2);

    std::vector<char> bdry_mask(
        static_cast<std::size_t>(grid.dim()) * grid.num_nodes(), 0);
    for (std::size_t b : grid.boundary_nodes())
        for (int c = 0; c < grid.dim(); ++c)
            bdry_mask[static_cast<std::size_t>(c) * grid.num_nodes() + b] = 1;

    SweepResult res;
    std::uint64_t salt = 0;
    for (std::complex<double> lambda : sector.samples()) {
        ResolventSample s;
        s.lambda = lambda;
        ++salt;
        try {
            SpMatC A = assemble_resolvent(cc, params, grid, lambda);
            Eigen::SparseLU<SpMatC> lu;
            lu.compute(A);
            if (lu.info() != Eigen::Success)
                throw SolverError("complex factorization failed");
            SpMatC AH = A.adjoint();
            AH.makeCompressed();
            Eigen::SparseLU<SpMatC> lu_adj;
            lu_adj.compute(AH);
            if (lu_adj.info() != Eigen::Success)
                throw SolverError("adjoint factorization failed");

            const Eigen::Index dim = A.rows();
            double b_norm =
                operator_norm(lu, lu_adj, nullptr, bdry_mask, dim, opts, salt);
            double g_norm =
                operator_norm(lu, lu_adj, &j1c, bdry_mask, dim, opts, salt + 7);
            double h_norm =
                operator_norm(lu, lu_adj, &j2c, bdry_mask, dim, opts, salt + 13);
            s.norm_j0 = std::abs(lambda) * b_norm;
            s.norm_j1 = std::sqrt(std::abs(lambda)) * g_norm;
            s.norm_j2 = h_norm;
            s.ok = true;
        } catch (const SolverError&) {
            s.ok = false;
            ++res.failures;
        }
        if (s.ok) {
            res.sup_j0 = std::max(res.sup_j0, s.norm_j0);
            res.sup_j1 = std::max(res.sup_j1, s.norm_j1);
            res.sup_j2 = std::max(res.sup_j2, s.norm_j2);
        }
        res.samples.push_back(s);
    }
    return res;
}

SpectrumResult decay_spectrum(const ConstantCoeffs& cc, const ClosureParams& params,
                              const Grid& grid, double velocity_fraction_cut) {
    params.validate();
    if (grid.boundary() != Boundary::dirichlet)
        throw ConfigError("decay spectrum requires a bounded Dirichlet grid");

    const int d = grid.dim();
    const auto n = static_cast<Eigen::Index>(grid.num_nodes());
    std::vector<Eigen::Index> interior;
    {
        std::vector<char> is_bdry(grid.num_nodes(), 0);
        for (std::size_t b : grid.boundary_nodes()) is_bdry[b] = 1;
        for (int c = 0; c < d; ++c)
            for (Eigen::Index i = 0; i < n; ++i)
                if (!is_bdry[static_cast<std::size_t>(i)])
                    interior.push_back(static_cast<Eigen::Index>(c) * n + i);
    }
    const auto ni = static_cast<Eigen::Index>(interior.size());
    const Eigen::Index size = 2 * n + ni;

    Eigen::MatrixXd D = Eigen::MatrixXd(linear_core::div_matrix(grid));
    Eigen::MatrixXd G = Eigen::MatrixXd(linear_core::grad_matrix(grid));
    Eigen::MatrixXd L = Eigen::MatrixXd(linear_core::vector_laplacian_matrix(grid));
    Eigen::MatrixXd GD = Eigen::MatrixXd(linear_core::grad_div_matrix(grid));

    const double mass = cc.r_star + cc.q_star;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(size, size);
    // sigma' = -r* D v,  eta' = -q* D v
    for (Eigen::Index j = 0; j < ni; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            A(i, 2 * n + j) = -cc.r_star * D(i, interior[static_cast<std::size_t>(j)]);
            A(n + i, 2 * n + j) =
                -cc.q_star * D(i, interior[static_cast<std::size_t>(j)]);
        }
    }
    // v' = (mu L + nu GD) v / mass - (omega1 G sigma + omega2 G eta) / mass
    for (Eigen::Index i = 0; i < ni; ++i) {
        const Eigen::Index row = interior[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < n; ++c) {
            A(2 * n + i, c) = -cc.omega1 / mass * G(row, c);
            A(2 * n + i, n + c) = -cc.omega2 / mass * G(row, c);
        }
        for (Eigen::Index j = 0; j < ni; ++j) {
            const Eigen::Index col = interior[static_cast<std::size_t>(j)];
            A(2 * n + i, 2 * n + j) =
                (params.mu * L(row, col) + params.nu * GD(row, col)) / mass;
        }
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/true);
    SpectrumResult out;
    // Steady family: v = 0 with omega1 sigma + omega2 eta in the kernel of
    // the interior gradient rows (constants plus centered-stencil
    // checkerboards): dimension N + dim ker(G_interior).
    {
        std::vector<char> is_bdry(grid.num_nodes(), 0);
        for (std::size_t b : grid.boundary_nodes()) is_bdry[b] = 1;
        Eigen::MatrixXd Gint(ni, n);
        Eigen::Index row = 0;
        for (Eigen::Index i = 0; i < ni; ++i)
            Gint.row(row++) = G.row(interior[static_cast<std::size_t>(i)]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Gint);
        qr.setThreshold(1e-10);
        out.kernel_dim_expected =
            static_cast<std::size_t>(n) +
            static_cast<std::size_t>(n - qr.rank());
    }
    if (es.info() != Eigen::Success) {
        out.converged = false;
        return out;
    }
    Eigen::VectorXcd eig = es.eigenvalues();
    Eigen::MatrixXcd vecs = es.eigenvectors();
    double max_abs = 0.0;
    for (Eigen::Index i = 0; i < eig.size(); ++i)
        max_abs = std::max(max_abs, std::abs(eig[i]));
    const double cutoff = 1e-7 * std::max(1.0, max_abs);

    double rightmost = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
        out.eigenvalues.push_back(eig[i]);
        if (std::abs(eig[i]) <= cutoff) {
            ++out.kernel_dim;
            continue;
        }
        double vel2 = vecs.col(i).segment(2 * n, ni).squaredNorm();
        double all2 = vecs.col(i).squaredNorm();
        if (vel2 < velocity_fraction_cut * all2) {
            ++out.artifact_dim;
            continue;
        }
        rightmost = std::max(rightmost, eig[i].real());
    }
    out.beta_hat = -rightmost;
    return out;
}

} // namespace bifluid::spectra
