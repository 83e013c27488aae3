#include "bifluid/diagnostics.hpp"

#include <cmath>

namespace bifluid::diagnostics {

namespace {

double lq_pow(const ScalarField& f, double q) {
    // integral of |f|^q (no final root), fixed summation order
    const auto& w = f.grid().quad_weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        acc += w[i] * std::pow(std::fabs(f[i]), q);
    return acc;
}

// Trapezoid of g(t)^p over the snapshot times, then ^(1/p).
double lp_time(const std::vector<double>& g, double dt, double p) {
    if (g.size() < 2) return g.empty() ? 0.0 : g[0];
    double acc = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        double w = (n == 0 || n + 1 == g.size()) ? 0.5 : 1.0;
        acc += w * dt * std::pow(g[n], p);
    }
    return std::pow(acc, 1.0 / p);
}

} // namespace

double w1q_norm(const ScalarField& f, double q) {
    double acc = lq_pow(f, q) + lq_pow(ops::d1(f, 0), q);
    if (f.grid().dim() == 2) acc += lq_pow(ops::d1(f, 1), q);
    return std::pow(acc, 1.0 / q);
}

double grad_lq_norm(const ScalarField& f, double q) {
    double acc = lq_pow(ops::d1(f, 0), q);
    if (f.grid().dim() == 2) acc += lq_pow(ops::d1(f, 1), q);
    return std::pow(acc, 1.0 / q);
}

double lq_norm(const VectorField& v, double q) {
    double acc = 0.0;
    for (int c = 0; c < v.dim(); ++c) acc += lq_pow(v.comp(c), q);
    return std::pow(acc, 1.0 / q);
}

double w2q_norm(const VectorField& v, double q) {
    const int d = v.dim();
    double acc = 0.0;
    for (int c = 0; c < d; ++c) {
        acc += lq_pow(v.comp(c), q);
        acc += lq_pow(ops::d1(v.comp(c), 0), q);
        acc += lq_pow(ops::d2(v.comp(c), 0), q);
        if (d == 2) {
            acc += lq_pow(ops::d1(v.comp(c), 1), q);
            acc += lq_pow(ops::d2(v.comp(c), 1), q);
            acc += lq_pow(ops::dxy(v.comp(c)), q);
        }
    }
    return std::pow(acc, 1.0 / q);
}

XNormReport xnorm(const Trajectory& traj, const XNormOptions& opt) {
    if (traj.levels.size() < 2)
        throw ConfigError("X(T) norm needs at least two time levels");
    const double p = opt.p, q = opt.q;
    if (!(p > 1.0) || !(q > 1.0))
        throw ConfigError("norm exponents must satisfy p, q > 1");
    const double dt = traj.dt;
    const std::size_t m = traj.levels.size();

    std::vector<double> v_w2(m), sig_w1(m), eta_w1(m);
    for (std::size_t n = 0; n < m; ++n) {
        v_w2[n] = w2q_norm(traj.levels[n].v, q);
        sig_w1[n] = w1q_norm(traj.levels[n].sigma, q);
        eta_w1[n] = w1q_norm(traj.levels[n].eta, q);
    }

    // Backward differences on levels 1..m-1.
    std::vector<double> vt_lq(m - 1), dsig_w1(m - 1), deta_w1(m - 1),
        gsig_lq(m - 1), geta_lq(m - 1);
    for (std::size_t n = 1; n < m; ++n) {
        VectorField dv = traj.levels[n].v - traj.levels[n - 1].v;
        vt_lq[n - 1] = lq_norm((1.0 / dt) * dv, q);
        ScalarField ds = traj.levels[n].sigma - traj.levels[n - 1].sigma;
        ScalarField de = traj.levels[n].eta - traj.levels[n - 1].eta;
        dsig_w1[n - 1] = w1q_norm((1.0 / dt) * ds, q);
        deta_w1[n - 1] = w1q_norm((1.0 / dt) * de, q);
        gsig_lq[n - 1] = grad_lq_norm(traj.levels[n].sigma, q);
        geta_lq[n - 1] = grad_lq_norm(traj.levels[n].eta, q);
    }

    XNormReport rep;
    rep.v_LpW2q = lp_time(v_w2, dt, p);
    rep.vt_LpLq = lp_time(vt_lq, dt, p);

    std::vector<double> sig_eta_w1p(m);
    for (std::size_t n = 0; n < m; ++n) {
        double td = 0.0;
        if (n >= 1)
            td = std::pow(dsig_w1[n - 1], p) + std::pow(deta_w1[n - 1], p);
        sig_eta_w1p[n] = std::pow(
            std::pow(sig_w1[n], p) + std::pow(eta_w1[n], p) + td, 1.0 / p);
    }
    rep.sig_eta_W1pW1q = lp_time(sig_eta_w1p, dt, p);

    std::vector<double> g_both(m - 1), dt_both(m - 1);
    for (std::size_t n = 0; n + 1 < m; ++n) {
        g_both[n] = std::pow(std::pow(gsig_lq[n], p) + std::pow(geta_lq[n], p), 1.0 / p);
        dt_both[n] = std::pow(std::pow(dsig_w1[n], p) + std::pow(deta_w1[n], p), 1.0 / p);
    }
    rep.grad_sig_eta_LpLq = lp_time(g_both, dt, p);
    rep.dt_sig_eta_LpW1q = lp_time(dt_both, dt, p);

    const double T = traj.horizon();
    rep.holder_T_factor = std::pow(T, 1.0 - 1.0 / p);
    return rep;
}

std::vector<double> xdot_density(const Trajectory& traj, double q,
                                 double beta_weight) {
    const std::size_t m = traj.levels.size();
    std::vector<double> out;
    out.reserve(m > 1 ? m - 1 : 0);
    for (std::size_t n = 1; n < m; ++n) {
        const TimeLevel& cur = traj.levels[n];
        VectorField dv = (1.0 / traj.dt) * (cur.v - traj.levels[n - 1].v);
        ScalarField ds = (1.0 / traj.dt) * (cur.sigma - traj.levels[n - 1].sigma);
        ScalarField de = (1.0 / traj.dt) * (cur.eta - traj.levels[n - 1].eta);
        double dens = w2q_norm(cur.v, q) + lq_norm(dv, q) +
                      grad_lq_norm(cur.sigma, q) + grad_lq_norm(cur.eta, q) +
                      w1q_norm(ds, q) + w1q_norm(de, q);
        out.push_back(dens * std::exp(beta_weight * traj.time(n)));
    }
    return out;
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& density) {
    DecayFit fit;
    if (t.size() != density.size() || t.size() < 4) {
        fit.reliable = false;
        return fit;
    }
    const std::size_t m = t.size();
    const std::size_t start = m / 2; // late-window convention
    std::vector<double> ts, ys;
    for (std::size_t i = start; i < m; ++i) {
        if (!(density[i] > 0.0)) {
            fit.reliable = false;
            return fit;
        }
        ts.push_back(t[i]);
        ys.push_back(std::log(density[i]));
    }
    const std::size_t k = ts.size();
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
    }
    const double n = static_cast<double>(k);
    const double det = n * stt - st * st;
    if (det == 0.0) {
        fit.reliable = false;
        return fit;
    }
    const double slope = (n * sty - st * sy) / det;
    const double icept = (sy - slope * st) / n;
    fit.beta_fit = -slope;
    double ss = 0.0;
    std::size_t upticks = 0;
    for (std::size_t i = 0; i < k; ++i) {
        double r = ys[i] - (icept + slope * ts[i]);
        ss += r * r;
        if (i > 0 && density[start + i] > 1.2 * density[start + i - 1]) ++upticks;
    }
    fit.residual = std::sqrt(ss / n);
    if (upticks > k / 4) fit.reliable = false;
    return fit;
}

double besov_proxy(const ScalarField& u, double q) {
    const Grid& g = u.grid();
    double second = lq_pow(ops::d2(u, 0), q) * std::pow(g.hx(), q);
    if (g.dim() == 2) {
        second += lq_pow(ops::d2(u, 1), q) * std::pow(g.hy(), q);
        second += lq_pow(ops::dxy(u), q) * std::pow(std::sqrt(g.hx() * g.hy()), q);
    }
    return std::max(w1q_norm(u, q), std::pow(second, 1.0 / q));
}

double besov_proxy(const VectorField& u, double q) {
    double acc = 0.0;
    for (int c = 0; c < u.dim(); ++c)
        acc += std::pow(besov_proxy(u.comp(c), q), q);
    return std::pow(acc, 1.0 / q);
}

QuadraticDichotomy dichotomy_roots(double C, double eps) {
    QuadraticDichotomy d;
    if (!(C > 0.0)) return d;
    const double disc = 1.0 / (4.0 * C * C) - eps;
    if (disc < 0.0) return d;
    d.x1 = 1.0 / (2.0 * C) - std::sqrt(disc);
    d.x2 = 1.0 / (2.0 * C) + std::sqrt(disc);
    d.admissible = true;
    return d;
}

} // namespace bifluid::diagnostics
