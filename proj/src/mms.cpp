#include "bifluid/mms.hpp"

#include <cmath>
#include <numbers>

#include "bifluid/linear_core.hpp"

namespace bifluid::mms {

namespace {

constexpr double kPi = std::numbers::pi;

// Manufactured fields on (0,1)^d with v = 0 on the boundary:
//   v_c  = e^{-t} sin(pi x) [sin(pi y)]
//   sig  = 0.5 cos(t) cos(pi x) [cos(pi y)]
//   eta  = 0.3 e^{-t/2} cos(2 pi x) [cos(pi y)]
// Frozen coefficients r0 = 1 + 0.2 cos(pi x)[cos(pi y)],
//                     q0 = 1 + 0.1 sin(pi x)[sin(pi y)].
struct Exact {
    int dim;

    double v(double t, double x, double y) const {
        double s = std::exp(-t) * std::sin(kPi * x);
        return dim == 2 ? s * std::sin(kPi * y) : s;
    }
    double v_t(double t, double x, double y) const { return -v(t, x, y); }
    double v_x(double t, double x, double y) const {
        double s = std::exp(-t) * kPi * std::cos(kPi * x);
        return dim == 2 ? s * std::sin(kPi * y) : s;
    }
    double v_y(double t, double x, double y) const {
        return dim == 2 ? std::exp(-t) * std::sin(kPi * x) * kPi * std::cos(kPi * y)
                        : 0.0;
    }
    double v_xx(double t, double x, double y) const {
        return -kPi * kPi * v(t, x, y);
    }
    double v_yy(double t, double x, double y) const {
        return dim == 2 ? -kPi * kPi * v(t, x, y) : 0.0;
    }
    double v_xy(double t, double x, double y) const {
        return dim == 2 ? std::exp(-t) * kPi * kPi * std::cos(kPi * x) *
                              std::cos(kPi * y)
                        : 0.0;
    }

    double sig(double t, double x, double y) const {
        double s = 0.5 * std::cos(t) * std::cos(kPi * x);
        return dim == 2 ? s * std::cos(kPi * y) : s;
    }
    double sig_t(double t, double x, double y) const {
        double s = -0.5 * std::sin(t) * std::cos(kPi * x);
        return dim == 2 ? s * std::cos(kPi * y) : s;
    }
    double sig_x(double t, double x, double y) const {
        double s = -0.5 * std::cos(t) * kPi * std::sin(kPi * x);
        return dim == 2 ? s * std::cos(kPi * y) : s;
    }
    double sig_y(double t, double x, double y) const {
        return dim == 2
                   ? -0.5 * std::cos(t) * std::cos(kPi * x) * kPi * std::sin(kPi * y)
                   : 0.0;
    }

    double eta(double t, double x, double y) const {
        double s = 0.3 * std::exp(-0.5 * t) * std::cos(2.0 * kPi * x);
        return dim == 2 ? s * std::cos(kPi * y) : s;
    }
    double eta_t(double t, double x, double y) const { return -0.5 * eta(t, x, y); }
    double eta_x(double t, double x, double y) const {
        double s = -0.6 * kPi * std::exp(-0.5 * t) * std::sin(2.0 * kPi * x);
        return dim == 2 ? s * std::cos(kPi * y) : s;
    }
    double eta_y(double t, double x, double y) const {
        return dim == 2 ? -0.3 * std::exp(-0.5 * t) * std::cos(2.0 * kPi * x) * kPi *
                              std::sin(kPi * y)
                        : 0.0;
    }

    double r0(double x, double y) const {
        double s = 0.2 * std::cos(kPi * x);
        return 1.0 + (dim == 2 ? s * std::cos(kPi * y) : s);
    }
    double q0(double x, double y) const {
        double s = 0.1 * std::sin(kPi * x);
        return 1.0 + (dim == 2 ? s * std::sin(kPi * y) : s);
    }

    // div v and its gradient (both velocity components share one profile)
    double div_v(double t, double x, double y) const {
        return v_x(t, x, y) + v_y(t, x, y);
    }
    double ddx_div(double t, double x, double y) const {
        return v_xx(t, x, y) + v_xy(t, x, y);
    }
    double ddy_div(double t, double x, double y) const {
        return v_xy(t, x, y) + v_yy(t, x, y);
    }
};

} // namespace

StudyRow run_case(int dim, std::size_t nx, double dt, double T,
                  const ClosureParams& params) {
    Exact ex{dim};
    GridPtr g = dim == 1
                    ? std::make_shared<Grid>(Grid::line(nx, 0.0, 1.0))
                    : std::make_shared<Grid>(Grid::rect(nx, nx, 0.0, 1.0, 0.0, 1.0));

    ScalarField r0(g), q0(g);
    for (std::size_t j = 0; j < g->ny(); ++j)
        for (std::size_t i = 0; i < g->nx(); ++i) {
            std::size_t node = g->index(i, j);
            r0[node] = ex.r0(g->x(i), g->y(j));
            q0[node] = ex.q0(g->x(i), g->y(j));
        }
    lagrangian::Frozen frozen = lagrangian::Frozen::from_fields(r0, q0, params);
    linear_core::LinearCoeffs coeffs = linear_core::LinearCoeffs::from_frozen(frozen);
    linear_core::EllipticOperator op = linear_core::EllipticOperator::assemble(
        coeffs, params, dt, /*lambda0=*/1.0, /*density_floor=*/1e-3);

    auto fill_level = [&](double t, linear_core::StepState& st) {
        for (std::size_t j = 0; j < g->ny(); ++j)
            for (std::size_t i = 0; i < g->nx(); ++i) {
                std::size_t node = g->index(i, j);
                double x = g->x(i), y = g->y(j);
                st.sigma[node] = ex.sig(t, x, y);
                st.eta[node] = ex.eta(t, x, y);
                for (int c = 0; c < dim; ++c) st.v.comp(c)[node] = ex.v(t, x, y);
            }
    };

    linear_core::StepState state{ScalarField(g), ScalarField(g), VectorField(g)};
    fill_level(0.0, state);

    const auto steps = static_cast<std::size_t>(std::lround(T / dt));
    for (std::size_t n = 0; n < steps; ++n) {
        const double t1 = static_cast<double>(n + 1) * dt;
        lagrangian::RhsBundle rhs;
        rhs.f1 = ScalarField(g);
        rhs.f2 = ScalarField(g);
        rhs.f3 = VectorField(g, /*dirichlet=*/false);
        for (std::size_t j = 0; j < g->ny(); ++j)
            for (std::size_t i = 0; i < g->nx(); ++i) {
                std::size_t node = g->index(i, j);
                double x = g->x(i), y = g->y(j);
                rhs.f1[node] = ex.sig_t(t1, x, y) + r0[node] * ex.div_v(t1, x, y);
                rhs.f2[node] = ex.eta_t(t1, x, y) + q0[node] * ex.div_v(t1, x, y);
                double lap = ex.v_xx(t1, x, y) + ex.v_yy(t1, x, y);
                double mass = r0[node] + q0[node];
                double gdx = ex.ddx_div(t1, x, y);
                rhs.f3.comp(0)[node] = mass * ex.v_t(t1, x, y) - params.mu * lap -
                                       params.nu * gdx +
                                       frozen.omega1[node] * ex.sig_x(t1, x, y) +
                                       frozen.omega2[node] * ex.eta_x(t1, x, y);
                if (dim == 2) {
                    double gdy = ex.ddy_div(t1, x, y);
                    rhs.f3.comp(1)[node] = mass * ex.v_t(t1, x, y) -
                                           params.mu * lap - params.nu * gdy +
                                           frozen.omega1[node] * ex.sig_y(t1, x, y) +
                                           frozen.omega2[node] * ex.eta_y(t1, x, y);
                }
            }
        state = linear_core::linear_step(state, rhs, coeffs, op);
    }

    const double Tend = static_cast<double>(steps) * dt;
    linear_core::StepState exact{ScalarField(g), ScalarField(g), VectorField(g)};
    fill_level(Tend, exact);

    StudyRow row;
    row.h = g->hx();
    row.dt = dt;
    row.err_sigma = ops::lq_norm(state.sigma - exact.sigma, 2.0);
    row.err_eta = ops::lq_norm(state.eta - exact.eta, 2.0);
    double ev = 0.0;
    for (int c = 0; c < dim; ++c) {
        double e = ops::lq_norm(state.v.comp(c) - exact.v.comp(c), 2.0);
        ev += e * e;
    }
    row.err_v = std::sqrt(ev);
    row.err_total = std::sqrt(row.err_sigma * row.err_sigma +
                              row.err_eta * row.err_eta + row.err_v * row.err_v);
    return row;
}

namespace {

double fit_order(const std::vector<double>& scale, const std::vector<double>& err) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(scale.size());
    for (std::size_t i = 0; i < scale.size(); ++i) {
        double lx = std::log(scale[i]), ly = std::log(err[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

StudyResult spatial_study(int dim, int levels, std::size_t nx0, double T,
                          const ClosureParams& params) {
    StudyResult res;
    std::vector<double> hs, errs;
    std::size_t nx = nx0;
    for (int l = 0; l < levels; ++l) {
        // dt tied to h^2: halving h quarters dt, so the first-order temporal
        // error tracks the second-order spatial one.
        double dt = (T / 8.0) * std::pow(0.25, l);
        StudyRow row = run_case(dim, nx, dt, T, params);
        res.rows.push_back(row);
        hs.push_back(row.h);
        errs.push_back(row.err_total);
        nx = 2 * (nx - 1) + 1;
    }
    res.observed_order = fit_order(hs, errs);
    return res;
}

StudyResult temporal_study(int dim, int levels, std::size_t nx, double dt0,
                           double T, const ClosureParams& params) {
    StudyResult res;
    std::vector<double> dts, errs;
    double dt = dt0;
    for (int l = 0; l < levels; ++l) {
        StudyRow row = run_case(dim, nx, dt, T, params);
        res.rows.push_back(row);
        dts.push_back(row.dt);
        errs.push_back(row.err_total);
        dt *= 0.5;
    }
    res.observed_order = fit_order(dts, errs);
    return res;
}

} // namespace bifluid::mms
