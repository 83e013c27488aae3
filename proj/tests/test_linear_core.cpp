#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "bifluid/linear_core.hpp"
#include "bifluid/mms.hpp"

using namespace bifluid;
using namespace bifluid::linear_core;
constexpr double kPi = std::numbers::pi;

namespace {

ClosureParams quad_params() { return {3.0, 1.5, 1.0, 0.0}; }

GridPtr line(std::size_t n, Boundary bc = Boundary::dirichlet) {
    return std::make_shared<Grid>(Grid::line(n, 0.0, 1.0, bc));
}

ScalarField random_field(GridPtr g, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    ScalarField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
    return f;
}

} // namespace

TEST_CASE("matrix assembly matches the apply-path operators") {
    std::mt19937_64 rng(31);
    for (Boundary bc : {Boundary::dirichlet, Boundary::periodic}) {
        auto g = std::make_shared<Grid>(Grid::rect(14, 11, 0.0, 1.0, 0.0, 2.0, bc));
        ScalarField f = random_field(g, rng, -1.0, 1.0);
        Eigen::VectorXd fv(static_cast<Eigen::Index>(f.size()));
        for (std::size_t i = 0; i < f.size(); ++i)
            fv[static_cast<Eigen::Index>(i)] = f[i];

        for (int axis = 0; axis < 2; ++axis) {
            Eigen::VectorXd m1 = d1_matrix(*g, axis) * fv;
            ScalarField a1 = ops::d1(f, axis);
            Eigen::VectorXd m2 = d2_matrix(*g, axis) * fv;
            ScalarField a2 = ops::d2(f, axis);
            for (std::size_t i = 0; i < f.size(); ++i) {
                CHECK(m1[static_cast<Eigen::Index>(i)] ==
                      doctest::Approx(a1[i]).epsilon(1e-12).scale(1.0));
                CHECK(m2[static_cast<Eigen::Index>(i)] ==
                      doctest::Approx(a2[i]).epsilon(1e-12).scale(1.0));
            }
        }

        VectorField v(g, /*dirichlet=*/false);
        v.comp(0) = random_field(g, rng, -1.0, 1.0);
        v.comp(1) = random_field(g, rng, -1.0, 1.0);
        Eigen::VectorXd vv = flatten(v);
        Eigen::VectorXd dv = div_matrix(*g) * vv;
        ScalarField da = ops::divergence(v);
        Eigen::VectorXd gd = grad_div_matrix(*g) * vv;
        VectorField ga = ops::grad_div(v);
        Eigen::VectorXd lv = vector_laplacian_matrix(*g) * vv;
        VectorField la = ops::laplacian(v);
        const auto n = static_cast<Eigen::Index>(g->num_nodes());
        for (std::size_t i = 0; i < g->num_nodes(); ++i) {
            CHECK(dv[static_cast<Eigen::Index>(i)] ==
                  doctest::Approx(da[i]).epsilon(1e-11).scale(1.0));
            for (int c = 0; c < 2; ++c) {
                CHECK(gd[c * n + static_cast<Eigen::Index>(i)] ==
                      doctest::Approx(ga.comp(c)[i]).epsilon(1e-11).scale(1.0));
                CHECK(lv[c * n + static_cast<Eigen::Index>(i)] ==
                      doctest::Approx(la.comp(c)[i]).epsilon(1e-11).scale(1.0));
            }
        }
    }
}

TEST_CASE("eliminated operator matches the discrete Fourier symbol (1d periodic)") {
    auto g = line(32, Boundary::periodic);
    ClosureParams p = quad_params();
    lagrangian::Frozen frozen = lagrangian::Frozen::from_constants(g, 1.0, 1.0, p);
    LinearCoeffs coeffs = LinearCoeffs::from_frozen(frozen);
    const double dt = 0.05;
    EllipticOperator op = EllipticOperator::assemble(coeffs, p, dt);

    const double h = g->hx();
    const double mass = 2.0;
    const double wbar = frozen.omega1[0] * 1.0 + frozen.omega2[0] * 1.0;
    for (int k : {1, 3, 7, 15}) {
        double theta = 2.0 * kPi * static_cast<double>(k) / 32.0;
        // discrete symbols: compact second difference and composed grad*div
        double s2 = 4.0 * std::pow(std::sin(0.5 * theta), 2) / (h * h);
        double sc = std::pow(std::sin(theta) / h, 2);
        double symbol = mass / dt + p.mu * s2 + p.nu * s2 + dt * wbar * sc;

        VectorField mode(g, /*dirichlet=*/false);
        for (std::size_t i = 0; i < g->nx(); ++i)
            mode.comp(0)[i] = std::cos(theta * static_cast<double>(i));
        Eigen::VectorXd out = op.matrix() * flatten(mode);
        for (std::size_t i = 0; i < g->nx(); ++i)
            CHECK(out[static_cast<Eigen::Index>(i)] ==
                  doctest::Approx(symbol * mode.comp(0)[i]).epsilon(1e-10).scale(symbol));
    }
}

TEST_CASE("assembly refuses steps outside the resolvent sector") {
    auto g = line(9);
    ClosureParams p = quad_params();
    LinearCoeffs coeffs =
        LinearCoeffs::from_frozen(lagrangian::Frozen::from_constants(g, 1.0, 1.0, p));
    CHECK_THROWS_AS(EllipticOperator::assemble(coeffs, p, 2.0, /*lambda0=*/1.0),
                    ConfigError);
    CHECK_NOTHROW(EllipticOperator::assemble(coeffs, p, 1.0, /*lambda0=*/1.0));
}

TEST_CASE("coefficient validation") {
    auto g = line(9);
    ClosureParams p = quad_params();
    LinearCoeffs coeffs =
        LinearCoeffs::from_frozen(lagrangian::Frozen::from_constants(g, 0.4, 0.4, p));
    CHECK_NOTHROW(coeffs.validate(0.5));
    CHECK_THROWS_AS(coeffs.validate(1.0), InvariantError);
}

TEST_CASE("zero is a fixed point of the step") {
    auto g = line(17);
    ClosureParams p = quad_params();
    lagrangian::Frozen frozen = lagrangian::Frozen::from_constants(g, 1.0, 1.0, p);
    LinearCoeffs coeffs = LinearCoeffs::from_frozen(frozen);
    EllipticOperator op = EllipticOperator::assemble(coeffs, p, 0.01);
    StepState z{ScalarField(g), ScalarField(g), VectorField(g)};
    lagrangian::RhsBundle rhs{ScalarField(g), ScalarField(g), VectorField(g, false),
                              lagrangian::RhsMode::around_constant};
    StepState out = linear_step(z, rhs, coeffs, op);
    CHECK(ops::max_norm(out.sigma) == 0.0);
    CHECK(ops::max_norm(out.eta) == 0.0);
    CHECK(ops::max_norm(out.v.comp(0)) == 0.0);
}

TEST_CASE("dirichlet rows give exact boundary zeros") {
    auto g = line(17);
    ClosureParams p = quad_params();
    std::mt19937_64 rng(5);
    ScalarField r0 = random_field(g, rng, 0.8, 1.6);
    ScalarField q0 = random_field(g, rng, 0.7, 1.2);
    lagrangian::Frozen frozen = lagrangian::Frozen::from_fields(r0, q0, p);
    LinearCoeffs coeffs = LinearCoeffs::from_frozen(frozen);
    EllipticOperator op = EllipticOperator::assemble(coeffs, p, 0.02);
    StepState st{random_field(g, rng, -0.1, 0.1), random_field(g, rng, -0.1, 0.1),
                 VectorField(g)};
    lagrangian::RhsBundle rhs{random_field(g, rng, -1.0, 1.0),
                              random_field(g, rng, -1.0, 1.0),
                              VectorField(g, false),
                              lagrangian::RhsMode::around_initial};
    rhs.f3.comp(0) = random_field(g, rng, -1.0, 1.0);
    StepState out = linear_step(st, rhs, coeffs, op);
    CHECK(out.v.comp(0)[0] == 0.0);
    CHECK(out.v.comp(0)[g->nx() - 1] == 0.0);
}

// Brute-force oracle: the density-eliminated velocity solve followed by the
// explicit sigma/eta updates must equal the monolithic implicit solve of the
// coupled three-field block system.
TEST_CASE("density elimination equals the monolithic coupled step") {
    auto g = line(17);
    const auto n = static_cast<Eigen::Index>(g->nx());
    ClosureParams p = quad_params();
    std::mt19937_64 rng(123);
    ScalarField r0 = random_field(g, rng, 0.8, 1.6);
    ScalarField q0 = random_field(g, rng, 0.6, 1.4);
    lagrangian::Frozen frozen = lagrangian::Frozen::from_fields(r0, q0, p);
    LinearCoeffs coeffs = LinearCoeffs::from_frozen(frozen);
    const double dt = 0.04;
    EllipticOperator op = EllipticOperator::assemble(coeffs, p, dt);

    Eigen::MatrixXd D = Eigen::MatrixXd(div_matrix(*g));
    Eigen::MatrixXd G = Eigen::MatrixXd(grad_matrix(*g));
    Eigen::MatrixXd L = Eigen::MatrixXd(vector_laplacian_matrix(*g));
    Eigen::MatrixXd GD = Eigen::MatrixXd(grad_div_matrix(*g));

    for (int trial = 0; trial < 3; ++trial) {
        StepState st{random_field(g, rng, -0.2, 0.2), random_field(g, rng, -0.2, 0.2),
                     VectorField(g)};
        for (std::size_t i = 1; i + 1 < g->nx(); ++i)
            st.v.comp(0)[i] = 0.3 * std::sin(kPi * g->x(i)) * (trial + 1);
        lagrangian::RhsBundle rhs{random_field(g, rng, -1.0, 1.0),
                                  random_field(g, rng, -1.0, 1.0),
                                  VectorField(g, false),
                                  lagrangian::RhsMode::around_initial};
        rhs.f3.comp(0) = random_field(g, rng, -1.0, 1.0);

        StepState fast = linear_step(st, rhs, coeffs, op);

        // monolithic block system for (sigma, eta, v) at the new time level
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 * n, 3 * n);
        Eigen::VectorXd b(3 * n);
        for (Eigen::Index i = 0; i < n; ++i) {
            A(i, i) = 1.0 / dt;
            A(n + i, n + i) = 1.0 / dt;
            for (Eigen::Index j = 0; j < n; ++j) {
                A(i, 2 * n + j) = r0[static_cast<std::size_t>(i)] * D(i, j);
                A(n + i, 2 * n + j) = q0[static_cast<std::size_t>(i)] * D(i, j);
            }
            b[i] = st.sigma[static_cast<std::size_t>(i)] / dt +
                   rhs.f1[static_cast<std::size_t>(i)];
            b[n + i] = st.eta[static_cast<std::size_t>(i)] / dt +
                       rhs.f2[static_cast<std::size_t>(i)];
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool bdry = (i == 0 || i == n - 1);
            if (bdry) {
                A(2 * n + i, 2 * n + i) = 1.0;
                b[2 * n + i] = 0.0;
                continue;
            }
            const auto iu = static_cast<std::size_t>(i);
            double mass = r0[iu] + q0[iu];
            for (Eigen::Index j = 0; j < n; ++j) {
                A(2 * n + i, j) = frozen.omega1[iu] * G(i, j);
                A(2 * n + i, n + j) = frozen.omega2[iu] * G(i, j);
                A(2 * n + i, 2 * n + j) = -p.mu * L(i, j) - p.nu * GD(i, j);
            }
            A(2 * n + i, 2 * n + i) += mass / dt;
            b[2 * n + i] = mass * st.v.comp(0)[iu] / dt + rhs.f3.comp(0)[iu];
        }
        Eigen::VectorXd sol = A.fullPivLu().solve(b);

        for (Eigen::Index i = 0; i < n; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            CHECK(std::fabs(sol[i] - fast.sigma[iu]) < 1e-9);
            CHECK(std::fabs(sol[n + i] - fast.eta[iu]) < 1e-9);
            CHECK(std::fabs(sol[2 * n + i] - fast.v.comp(0)[iu]) < 1e-9);
        }
    }
}

// Per-mode oracle on the periodic grid: the coupled step block-diagonalizes
// into 3x3 complex recursions; the discrete solution's Fourier amplitudes
// must follow them.
TEST_CASE("step follows the 3x3 per-mode recursion (1d periodic)") {
    const std::size_t n = 32;
    auto g = line(n, Boundary::periodic);
    ClosureParams p{3.0, 1.5, 0.8, 0.3};
    lagrangian::Frozen frozen = lagrangian::Frozen::from_constants(g, 1.2, 0.9, p);
    LinearCoeffs coeffs = LinearCoeffs::from_frozen(frozen);
    const double dt = 0.02;
    EllipticOperator op = EllipticOperator::assemble(coeffs, p, dt);

    const int k = 3;
    const double theta = 2.0 * kPi * k / static_cast<double>(n);
    const double h = g->hx();
    using C = std::complex<double>;
    const C I(0.0, 1.0);
    const C Dsym = I * std::sin(theta) / h;              // first-derivative symbol
    const double s2 = 4.0 * std::pow(std::sin(0.5 * theta), 2) / (h * h);
    const double mass = 1.2 + 0.9;
    const double w1 = frozen.omega1[0], w2 = frozen.omega2[0];
    const double wbar = w1 * 1.2 + w2 * 0.9;
    // eliminated velocity symbol at lambda = 1/dt
    const C a = mass / dt + p.mu * s2 + p.nu * s2 + dt * wbar * (-Dsym * Dsym);

    // start with a pure mode in v and zero densities
    StepState st{ScalarField(g), ScalarField(g), VectorField(g, false)};
    for (std::size_t i = 0; i < n; ++i)
        st.v.comp(0)[i] = std::cos(theta * static_cast<double>(i));
    lagrangian::RhsBundle zero{ScalarField(g), ScalarField(g), VectorField(g, false),
                               lagrangian::RhsMode::around_constant};

    auto amplitude = [&](const ScalarField& f) {
        C acc(0.0, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            acc += f[i] * std::exp(-I * theta * static_cast<double>(i));
        return acc * (2.0 / static_cast<double>(n));
    };

    C sig(0.0, 0.0), eta(0.0, 0.0), vel(1.0, 0.0);
    for (int step = 0; step < 20; ++step) {
        st = linear_step(st, zero, coeffs, op);
        // oracle recursion
        C vnew = (mass / dt * vel - w1 * Dsym * sig - w2 * Dsym * eta) / a;
        sig = sig - dt * 1.2 * Dsym * vnew;
        eta = eta - dt * 0.9 * Dsym * vnew;
        vel = vnew;
        CHECK(std::abs(amplitude(st.v.comp(0)) - vel) < 1e-10);
        CHECK(std::abs(amplitude(st.sigma) - sig) < 1e-10);
        CHECK(std::abs(amplitude(st.eta) - eta) < 1e-10);
    }
    // the mode decays geometrically
    CHECK(std::abs(vel) < 0.9);
}

TEST_CASE("resolvent apply") {
    auto g = line(33);
    ClosureParams p = quad_params();
    lagrangian::Frozen frozen = lagrangian::Frozen::from_constants(g, 1.0, 1.0, p);
    LinearCoeffs coeffs = LinearCoeffs::from_frozen(frozen);

    SUBCASE("zero forcing gives the zero solution") {
        EllipticOperator op = EllipticOperator::assemble(coeffs, p, 0.1);
        VectorField f(g, false);
        VectorField v = resolvent_apply(op, f);
        CHECK(ops::max_norm(v.comp(0)) == 0.0);
    }
    SUBCASE("norm decays like 1/lambda over a doubling sequence") {
        VectorField f(g, false);
        for (std::size_t i = 0; i < g->nx(); ++i)
            f.comp(0)[i] = std::sin(kPi * g->x(i));
        double prev = -1.0;
        for (double lambda : {64.0, 128.0, 256.0, 512.0}) {
            EllipticOperator op = EllipticOperator::assemble(coeffs, p, 1.0 / lambda);
            VectorField v = resolvent_apply(op, f);
            double norm = ops::lq_norm(v.comp(0), 2.0);
            if (prev > 0.0) {
                CHECK(norm < prev / 1.7); // ~2x per lambda doubling
            }
            prev = norm;
        }
    }
    SUBCASE("matches a dense independent solve") {
        EllipticOperator op = EllipticOperator::assemble(coeffs, p, 0.05);
        std::mt19937_64 rng(9);
        VectorField f(g, false);
        f.comp(0) = random_field(g, rng, -1.0, 1.0);
        for (std::size_t b : g->boundary_nodes()) f.comp(0)[b] = 0.0;
        VectorField v = resolvent_apply(op, f);
        Eigen::MatrixXd Ad = Eigen::MatrixXd(op.matrix());
        Eigen::VectorXd sol = Ad.fullPivLu().solve(flatten(f));
        for (std::size_t i = 0; i < g->nx(); ++i)
            CHECK(std::fabs(sol[static_cast<Eigen::Index>(i)] - v.comp(0)[i]) < 1e-10);
    }
}

TEST_CASE("periodic constant-coefficient step dissipates the energy norm") {
    const std::size_t n = 24;
    for (int dim = 1; dim <= 2; ++dim) {
        GridPtr g = dim == 1 ? line(n, Boundary::periodic)
                             : std::make_shared<Grid>(Grid::rect(
                                   n, n, 0.0, 1.0, 0.0, 1.0, Boundary::periodic));
        ClosureParams p{3.0, 1.5, 0.6, 0.2};
        const double rs = 1.1, qs = 0.8;
        lagrangian::Frozen frozen = lagrangian::Frozen::from_constants(g, rs, qs, p);
        LinearCoeffs coeffs = LinearCoeffs::from_frozen(frozen);
        EllipticOperator op = EllipticOperator::assemble(coeffs, p, 0.05);
        std::mt19937_64 rng(77);
        StepState st{random_field(g, rng, -0.3, 0.3), random_field(g, rng, -0.3, 0.3),
                     VectorField(g, false)};
        for (int c = 0; c < dim; ++c) st.v.comp(c) = random_field(g, rng, -0.3, 0.3);
        lagrangian::RhsBundle zero{ScalarField(g), ScalarField(g),
                                   VectorField(g, false),
                                   lagrangian::RhsMode::around_constant};
        const double w1 = frozen.omega1[0], w2 = frozen.omega2[0];
        auto energy = [&](const StepState& s) {
            double e = (w1 / rs) * ops::integrate(pointwise_mul(s.sigma, s.sigma)) +
                       (w2 / qs) * ops::integrate(pointwise_mul(s.eta, s.eta));
            for (int c = 0; c < dim; ++c)
                e += (rs + qs) * ops::integrate(pointwise_mul(s.v.comp(c), s.v.comp(c)));
            return e;
        };
        double prev = energy(st);
        for (int step = 0; step < 30; ++step) {
            st = linear_step(st, zero, coeffs, op);
            double e = energy(st);
            CHECK(e <= prev * (1.0 + 1e-12));
            prev = e;
        }
    }
}

TEST_CASE("manufactured-solution convergence orders") {
    ClosureParams p = quad_params();
    SUBCASE("spatial order ~2 in 1d") {
        mms::StudyResult res = mms::spatial_study(1, 3, 17, 0.25, p);
        CHECK(res.observed_order > 1.8);
        CHECK(res.observed_order < 2.2);
    }
    SUBCASE("temporal order ~1 in 1d") {
        mms::StudyResult res = mms::temporal_study(1, 3, 129, 0.25 / 8.0, 0.25, p);
        CHECK(res.observed_order > 0.8);
        CHECK(res.observed_order < 1.2);
    }
    SUBCASE("spatial order ~2 in 2d") {
        mms::StudyResult res = mms::spatial_study(2, 2, 9, 0.1, p);
        CHECK(res.observed_order > 1.6);
        CHECK(res.observed_order < 2.4);
    }
}
