#include "bifluid/closure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bifluid {

void ClosureParams::validate() const {
    if (!(gamma_minus > 1.0))
        throw ConfigError("closure requires gamma_minus > 1");
    if (!(gamma_plus >= gamma_minus))
        throw ConfigError("closure requires gamma_plus >= gamma_minus");
    if (!(mu > 0.0)) throw ConfigError("viscosity mu must be positive");
    if (!(mu + nu > 0.0)) throw ConfigError("viscosities must satisfy mu + nu > 0");
}

// Lower bound from the positivity lemma's case split: either R >= k/2 (so
// Z >= R >= k/2) or Q >= k/2 (so Z^gamma >= Q, i.e. Z >= (k/2)^{1/gamma}).
ZBracket z_bracket(double R, double Q, const ClosureParams& params) {
    const double g = params.gamma();
    const double k = R + Q;
    const double half = 0.5 * k;
    double lo = std::max(R, std::min(half, std::pow(half, 1.0 / g)));
    double hi = std::max(std::pow(2.0 * Q, 1.0 / g), 2.0 * R);
    return {lo, hi};
}

double solve_z(double R, double Q, const ClosureParams& params, double tol,
               int max_iter) {
    if (R < 0.0 || Q < 0.0) throw ConfigError("partial densities must be >= 0");
    if (R + Q <= 0.0)
        throw ConfigError("total vacuum R + Q = 0 is outside the closure domain");
    if (!(tol > 0.0)) throw ConfigError("solve_z tolerance must be positive");

    const double g = params.gamma();
    if (Q == 0.0) return R;                 // (1 - R/Z) Z^g = 0 with Z >= R > 0
    if (R == 0.0) return std::pow(Q, 1.0 / g);

    // G(Z) = Z^g - R Z^{g-1} - Q, strictly increasing for Z >= R.
    auto G = [&](double z) {
        return std::pow(z, g) - R * std::pow(z, g - 1.0) - Q;
    };
    auto dG = [&](double z) {
        return g * std::pow(z, g - 1.0) - R * (g - 1.0) * std::pow(z, g - 2.0);
    };

    ZBracket br = z_bracket(R, Q, params);
    double lo = br.lo, hi = br.hi;
    // Guard against rounding at the bracket edges.
    while (G(lo) > 0.0 && lo > 0.5 * br.lo) lo *= 0.999;
    while (G(hi) < 0.0) hi *= 1.001;

    const double eps = std::numeric_limits<double>::epsilon();
    double z = std::clamp(0.5 * (lo + hi), lo, hi);
    for (int it = 0; it < max_iter; ++it) {
        double gz = G(z);
        double slope = dG(z);
        double step = (slope > 0.0) ? gz / slope : 0.0;
        // residual within tolerance and Newton step at rounding level
        if (std::fabs(gz) <= tol && std::fabs(step) <= 8.0 * eps * z)
            return z;
        if (gz > 0.0)
            hi = z;
        else
            lo = z;
        double znext = z - step;
        if (!(znext > lo) || !(znext < hi) || step == 0.0) znext = 0.5 * (lo + hi);
        if (hi - lo <= 4.0 * eps * z) return znext;
        z = znext;
    }
    if (std::fabs(G(z)) <= tol) return z;
    std::ostringstream msg;
    msg << "closure solve did not converge in " << max_iter
        << " iterations; last bracket [" << lo << ", " << hi << "] for R=" << R
        << " Q=" << Q;
    throw SolverError(msg.str());
}

ClosureDerivs closure_derivatives(double Z, double R, const ClosureParams& params) {
    if (!(Z > 0.0)) throw InvariantError("closure derivatives undefined at Z = 0");
    const double g = params.gamma();
    const double den = g * std::pow(Z, g - 1.0) - R * (g - 1.0) * std::pow(Z, g - 2.0);
    return {std::pow(Z, g - 1.0) / den, 1.0 / den};
}

OmegaCoeffs omega_coefficients(double Z, double R, const ClosureParams& params) {
    if (!(Z > 0.0)) throw InvariantError("omega coefficients undefined at Z = 0");
    const double g = params.gamma();
    const double zgp = std::pow(Z, params.gamma_plus);
    const double den1 = g * Z - (g - 1.0) * R;
    const double den2 = g * std::pow(Z, g) - (g - 1.0) * R * std::pow(Z, g - 1.0);
    return {zgp / den1, zgp / den2};
}

PhasePoint recover_phases(double R, double Q, double Z, const ClosureParams& params,
                          double tol) {
    PhasePoint pt;
    pt.R = R;
    pt.Q = Q;
    pt.Z = Z;
    pt.alpha = R / Z;
    if (pt.alpha > 1.0 + tol)
        throw InvariantError("volume fraction alpha = R/Z exceeds 1");
    pt.alpha = std::min(pt.alpha, 1.0);
    pt.rho_plus = Z;
    pt.p = std::pow(Z, params.gamma_plus);
    if (1.0 - pt.alpha > tol) {
        pt.rho_minus = Q / (1.0 - pt.alpha);
    } else {
        pt.minus_vacuum = true;
        pt.rho_minus = 0.0;
    }
    return pt;
}

ScalarField solve_z_field(const ScalarField& R, const ScalarField& Q,
                          const ClosureParams& params, double tol,
                          ScalarField* omega1, ScalarField* omega2) {
    check_same_grid(R.grid(), Q.grid());
    ScalarField Z(R.grid_ptr());
    if (omega1) *omega1 = ScalarField(R.grid_ptr());
    if (omega2) *omega2 = ScalarField(R.grid_ptr());
    for (std::size_t i = 0; i < R.size(); ++i) {
        Z[i] = solve_z(R[i], Q[i], params, tol);
        if (omega1 || omega2) {
            OmegaCoeffs w = omega_coefficients(Z[i], R[i], params);
            if (omega1) (*omega1)[i] = w.omega1;
            if (omega2) (*omega2)[i] = w.omega2;
        }
    }
    return Z;
}

} // namespace bifluid
