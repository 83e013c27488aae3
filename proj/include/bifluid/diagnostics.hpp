#pragma once

#include <vector>

#include "bifluid/grid.hpp"
#include "bifluid/trajectory.hpp"

// Discrete norms of the solution class:
//
//   X(T):    |v|_{Lp W2q} + |v_t|_{Lp Lq} + |(sigma,eta)|_{W1p W1q},
//   dot-X:   |v|_{Lp W2q} + |v_t|_{Lp Lq} + |grad(sigma,eta)|_{Lp Lq}
//                                         + |(sigma_t,eta_t)|_{Lp W1q},
//
// with spatial Lq/W1q/W2q by trapezoid quadrature of difference quotients
// and time integrals by trapezoid over snapshots; time derivatives are
// backward differences, matching the stepper. Note the deliberate asymmetry
// of the seminorm (time derivatives in W1q but only gradients in Lq).

namespace bifluid::diagnostics {

double w1q_norm(const ScalarField& f, double q);
double w2q_norm(const VectorField& v, double q);
double lq_norm(const VectorField& v, double q);
double grad_lq_norm(const ScalarField& f, double q);

struct XNormOptions {
    double p = 2.0;
    double q = 2.0;
};

struct XNormReport {
    double v_LpW2q = 0.0;
    double vt_LpLq = 0.0;
    double sig_eta_W1pW1q = 0.0;
    double grad_sig_eta_LpLq = 0.0;
    double dt_sig_eta_LpW1q = 0.0;
    // Hoelder factor T^{1/p'} from the embedding step; makes the E(T)
    // smallness trend visible in reports.
    double holder_T_factor = 0.0;

    double x_norm() const { return v_LpW2q + vt_LpLq + sig_eta_W1pW1q; }
    double xdot_seminorm() const {
        return v_LpW2q + vt_LpLq + grad_sig_eta_LpLq + dt_sig_eta_LpW1q;
    }
};

// Throws ConfigError on fewer than two time levels.
XNormReport xnorm(const Trajectory& traj, const XNormOptions& opt = {});

// Instantaneous dot-X density per snapshot (n >= 1; time derivatives by
// backward difference). Optionally weighted by e^{beta t}.
std::vector<double> xdot_density(const Trajectory& traj, double q,
                                 double beta_weight = 0.0);

struct DecayFit {
    double beta_fit = 0.0;
    double residual = 0.0;
    bool reliable = true;
};

// Least-squares slope of log(density) vs t over the last half of the
// horizon. Flagged unreliable when the tail is non-monotone beyond a 20%
// uptick or the signal degenerates.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& density);

// Initial-data norm proxy for B^{2-2/p}_{q,p}: max of the W1q norm and the
// Lq size of h-weighted second difference quotients.
double besov_proxy(const VectorField& u, double q);
double besov_proxy(const ScalarField& u, double q);

// Roots of x^2 - x/C + eps = 0; the small root x1 is the bound the weighted
// seminorm must stay under in the global argument. Returns false when the
// discriminant is negative (data too large for the calibrated constant).
struct QuadraticDichotomy {
    double x1 = 0.0;
    double x2 = 0.0;
    bool admissible = false;
};
QuadraticDichotomy dichotomy_roots(double C, double eps);

} // namespace bifluid::diagnostics
