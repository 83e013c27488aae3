#include "bifluid/picard.hpp"

#include <cmath>
#include <sstream>

namespace bifluid::picard {

void PicardConfig::validate() const {
    if (!(dt > 0.0) || !(window_T > 0.0)) throw ConfigError("dt and window_T must be positive");
    if (window_T < dt) throw ConfigError("window_T must be at least one step");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (!(tol > 0.0)) throw ConfigError("fixed-point tolerance must be positive");
    if (!(tol < ball_M)) throw ConfigError("tolerance must be smaller than ball_M");
    if (!(delta > 0.0)) throw ConfigError("smallness budget delta must be positive");
    if (!(density_floor > 0.0)) throw ConfigError("density floor must be positive");
    if (!(norm_p > 1.0) || !(norm_q > 1.0)) throw ConfigError("norm exponents must exceed 1");
}

namespace {

Trajectory difference(const Trajectory& a, const Trajectory& b) {
    Trajectory d;
    d.t0 = a.t0;
    d.dt = a.dt;
    d.levels.reserve(a.levels.size());
    for (std::size_t n = 0; n < a.levels.size(); ++n)
        d.levels.push_back({a.levels[n].sigma - b.levels[n].sigma,
                            a.levels[n].eta - b.levels[n].eta,
                            a.levels[n].v - b.levels[n].v});
    return d;
}

double min_total_density(const ScalarField& r, const ScalarField& q) {
    double m = r[0] + q[0];
    for (std::size_t i = 1; i < r.size(); ++i) m = std::min(m, r[i] + q[i]);
    return m;
}

} // namespace

Trajectory apply_S(const Trajectory& prev, const lagrangian::Frozen& frozen,
                   const linear_core::LinearCoeffs& coeffs,
                   const linear_core::EllipticOperator& op,
                   const lagrangian::FlowHistory& base_history,
                   const ClosureParams& params, const PicardConfig& cfg) {
    const double dt = prev.dt;
    Trajectory out;
    out.t0 = prev.t0;
    out.dt = dt;
    out.levels.push_back(prev.levels.front());

    lagrangian::FlowHistory hist = base_history;
    const std::size_t steps = prev.steps();
    for (std::size_t n = 0; n < steps; ++n) {
        hist.advance(prev.levels[n].v, prev.levels[n + 1].v, dt);

        ScalarField r_bar = frozen.r0 + prev.levels[n + 1].sigma;
        ScalarField q_bar = frozen.q0 + prev.levels[n + 1].eta;
        if (min_total_density(r_bar, q_bar) < cfg.density_floor)
            throw InvariantError("total density of the iterate fell below the floor");

        VectorField v_t = (1.0 / dt) * (prev.levels[n + 1].v - prev.levels[n].v);
        lagrangian::StateView state{r_bar, q_bar, prev.levels[n + 1].v};
        lagrangian::RhsBundle rhs =
            frozen.is_constant
                ? lagrangian::rhs_global(state, hist, frozen, v_t, params,
                                         cfg.closure_tol)
                : lagrangian::rhs_local(state, hist, frozen, v_t, params,
                                        cfg.closure_tol);

        linear_core::StepState cur{out.levels[n].sigma, out.levels[n].eta,
                                   out.levels[n].v};
        linear_core::StepState next = linear_core::linear_step(cur, rhs, coeffs, op);
        out.levels.push_back({std::move(next.sigma), std::move(next.eta),
                              std::move(next.v)});
    }
    return out;
}

namespace {

struct MarchSetup {
    bool global = false;
    double r_star = 0.0, q_star = 0.0;
};

// Append monitors for window levels [first_level .. end] to the series,
// advancing the run history in step.
void record_series(SolveResult& res, lagrangian::FlowHistory& hist,
                   const Trajectory& traj, const lagrangian::Frozen& frozen,
                   const ClosureParams& params, const PicardConfig& cfg,
                   std::size_t first_level) {
    const GridPtr g = traj.grid();
    const auto& w = g->quad_weights();
    for (std::size_t n = first_level; n < traj.levels.size(); ++n) {
        if (n >= 1) hist.advance(traj.levels[n - 1].v, traj.levels[n].v, traj.dt);
        SeriesRow row;
        row.t = traj.time(n);
        ScalarField r = frozen.r0 + traj.levels[n].sigma;
        ScalarField q = frozen.q0 + traj.levels[n].eta;
        double mr = 0.0, mq = 0.0, amin = 1.0, amax = 0.0, zr = 1e300;
        for (std::size_t i = 0; i < r.size(); ++i) {
            double J = hist.jacobian(i);
            mr += w[i] * r[i] * J;
            mq += w[i] * q[i] * J;
            double Z = solve_z(r[i], q[i], params, cfg.closure_tol);
            double alpha = r[i] / Z;
            amin = std::min(amin, alpha);
            amax = std::max(amax, alpha);
            zr = std::min(zr, Z - r[i]);
        }
        row.mass_r = mr;
        row.mass_q = mq;
        row.alpha_min = amin;
        row.alpha_max = amax;
        row.r_z_margin = zr;
        row.min_total_density = min_total_density(r, q);
        row.grad_budget = hist.grad_linf_integral();
        if (n >= 1) {
            Trajectory mini;
            mini.t0 = traj.time(n - 1);
            mini.dt = traj.dt;
            mini.levels = {traj.levels[n - 1], traj.levels[n]};
            row.xdot_density = diagnostics::xdot_density(mini, cfg.norm_q)[0];
        }
        res.series.push_back(row);
    }
}

SolveResult march(const ScalarField& R0, const ScalarField& Q0,
                  const VectorField& u0, const ClosureParams& params,
                  const PicardConfig& cfg, double horizon_T,
                  const MarchSetup& setup,
                  const std::optional<Checkpoint>& resume,
                  std::vector<Checkpoint>* checkpoints) {
    params.validate();
    cfg.validate();
    check_same_grid(R0.grid(), Q0.grid());
    check_same_grid(R0.grid(), u0.grid());
    const GridPtr g = R0.grid_ptr();

    SolveResult res;
    ScalarField r = R0, q = Q0;
    VectorField v = u0;
    lagrangian::FlowHistory hist(g, cfg.delta);
    lagrangian::FlowHistory series_hist(g, cfg.delta);
    double t = 0.0;
    int window_index = 0;
    double window_T = cfg.window_T;

    if (resume) {
        t = resume->t;
        window_index = resume->window_index;
        window_T = resume->window_T;
        r = resume->r;
        q = resume->q;
        v = resume->v;
        hist = lagrangian::FlowHistory::restore(g, cfg.delta, resume->k,
                                                resume->k2, resume->budget_used);
        series_hist = hist;
    }

    // Small-data proxy norm for the blow-up monitor (global mode).
    double eps_hat = 0.0;
    double weighted_p_acc = 0.0; // running integral of (e^{bt} density)^p
    if (setup.global) {
        ScalarField dr = R0 - ScalarField(g, setup.r_star);
        ScalarField dq = Q0 - ScalarField(g, setup.q_star);
        eps_hat = diagnostics::w1q_norm(dr, cfg.norm_q) +
                  diagnostics::w1q_norm(dq, cfg.norm_q) +
                  diagnostics::besov_proxy(u0, cfg.norm_q);
    }

    std::optional<lagrangian::Frozen> const_frozen;
    std::optional<linear_core::LinearCoeffs> const_coeffs;
    std::optional<linear_core::EllipticOperator> const_op;

    const double t_end = horizon_T;
    bool first_window_done = resume.has_value();
    int halvings = 0;
    while (t < t_end - 1e-12 * std::max(1.0, t_end)) {
        const double remaining = t_end - t;
        double Tw = std::min(window_T, remaining);
        auto steps = static_cast<std::size_t>(std::lround(Tw / cfg.dt));
        if (steps == 0) steps = 1;
        Tw = static_cast<double>(steps) * cfg.dt;

        lagrangian::Frozen frozen =
            setup.global
                ? (const_frozen ? *const_frozen
                                : lagrangian::Frozen::from_constants(
                                      g, setup.r_star, setup.q_star, params,
                                      cfg.closure_tol))
                : lagrangian::Frozen::from_fields(r, q, params, cfg.closure_tol);
        if (setup.global && !const_frozen) const_frozen = frozen;

        linear_core::LinearCoeffs coeffs =
            (setup.global && const_coeffs) ? *const_coeffs
                                           : linear_core::LinearCoeffs::from_frozen(frozen);
        if (setup.global && !const_coeffs) const_coeffs = coeffs;

        if (!(setup.global && const_op)) {
            linear_core::EllipticOperator op = linear_core::EllipticOperator::assemble(
                coeffs, params, cfg.dt, cfg.lambda0, cfg.density_floor);
            if (setup.global)
                const_op = std::move(op);
            else
                const_op.emplace(std::move(op));
        }
        const linear_core::EllipticOperator& op = *const_op;

        // Window-initial level relative to the frozen state.
        TimeLevel init{r - frozen.r0, q - frozen.q0, v};
        Trajectory guess;
        guess.t0 = t;
        guess.dt = cfg.dt;
        guess.levels.assign(steps + 1, init);

        bool converged = false;
        int bad_streak = 0;
        double prev_diff = -1.0;
        double last_ratio = 2.0, second_last_ratio = 2.0;
        Trajectory accepted_traj;
        int recorded_ratios = 0;
        bool solver_trouble = false;

        try {
            for (int it = 1; it <= cfg.max_iter; ++it) {
                Trajectory next = apply_S(guess, frozen, coeffs, op, hist, params, cfg);
                diagnostics::XNormReport dn = diagnostics::xnorm(
                    difference(next, guess), {cfg.norm_p, cfg.norm_q});
                double diff = dn.x_norm();
                IterationRecord rec;
                rec.window = window_index;
                rec.iter = it;
                rec.diff_norm = diff;
                if (prev_diff > 0.0) {
                    rec.ratio = diff / prev_diff;
                    second_last_ratio = last_ratio;
                    last_ratio = rec.ratio;
                    ++recorded_ratios;
                    if (rec.ratio >= 1.0)
                        ++bad_streak;
                    else
                        bad_streak = 0;
                }
                double iter_norm =
                    diagnostics::xnorm(next, {cfg.norm_p, cfg.norm_q}).x_norm();
                if (iter_norm > cfg.ball_M) ++bad_streak;
                res.trace.push_back(rec);

                if (diff <= cfg.tol) {
                    converged = true;
                    accepted_traj = std::move(next);
                    break;
                }
                if (bad_streak >= 3) break;
                prev_diff = diff;
                guess = std::move(next);
            }
        } catch (const SolverError&) {
            solver_trouble = true;
        } catch (const InvariantError& e) {
            // Mid-run invariant violation (smallness budget, positivity,
            // denominator bound): keep the partial result.
            res.aborted = true;
            res.abort_reason = e.what();
            res.final_time = t;
            res.grad_budget_total = hist.grad_linf_integral();
            return res;
        }

        bool window_ok = converged && !solver_trouble;
        if (window_ok && recorded_ratios >= 2)
            window_ok = last_ratio < 0.9 && second_last_ratio < 0.9;

        if (!window_ok) {
            window_T *= 0.5;
            ++halvings;
            if (window_T < cfg.dt || halvings > cfg.max_window_halvings) {
                std::ostringstream why;
                why << "Picard iteration did not contract on window " << window_index
                    << "; suggested window_T = " << window_T;
                throw SolverError(why.str());
            }
            continue; // retry the same window with the shorter horizon
        }
        if (!res.trace.empty()) res.trace.back().accepted = true;

        if (!first_window_done) {
            res.first_window_norms =
                diagnostics::xnorm(accepted_traj, {cfg.norm_p, cfg.norm_q});
            first_window_done = true;
        }

        // Advance the run history and monitors along the converged window.
        std::size_t first_level = res.series.empty() ? 0 : 1;
        std::size_t series_start = res.series.size();
        record_series(res, series_hist, accepted_traj, frozen, params, cfg,
                      first_level);
        for (std::size_t n = 0; n + 1 < accepted_traj.levels.size(); ++n)
            hist.advance(accepted_traj.levels[n].v, accepted_traj.levels[n + 1].v,
                         cfg.dt);

        res.windows.push_back({accepted_traj, frozen});
        const TimeLevel& last = accepted_traj.levels.back();
        r = frozen.r0 + last.sigma;
        q = frozen.q0 + last.eta;
        v = last.v;
        t += Tw;
        ++window_index;

        if (setup.global) {
            // Blow-up monitor on the e^{beta t}-weighted running seminorm.
            for (std::size_t n = series_start; n < res.series.size(); ++n) {
                double dens = res.series[n].xdot_density *
                              std::exp(cfg.beta_weight * res.series[n].t);
                weighted_p_acc += cfg.dt * std::pow(dens, cfg.norm_p);
            }
            double weighted_norm = std::pow(weighted_p_acc, 1.0 / cfg.norm_p);
            res.weighted_xdot_norm = weighted_norm;
            if (eps_hat > 0.0 && weighted_norm > 2.0 * cfg.decay_C * eps_hat) {
                res.blowup_flag = true;
                res.final_time = t;
                res.grad_budget_total = hist.grad_linf_integral();
                return res;
            }
        }

        if (checkpoints) {
            Checkpoint cp;
            cp.t = t;
            cp.window_index = window_index;
            cp.window_T = window_T;
            cp.r = r;
            cp.q = q;
            cp.v = v;
            cp.k = hist.k();
            cp.k2 = hist.k2();
            cp.budget_used = hist.grad_linf_integral();
            checkpoints->push_back(std::move(cp));
        }
    }

    res.final_time = t;
    res.grad_budget_total = hist.grad_linf_integral();
    return res;
}

} // namespace

SolveResult solve_local(const ScalarField& R0, const ScalarField& Q0,
                        const VectorField& u0, const ClosureParams& params,
                        const PicardConfig& cfg, double horizon_T,
                        const std::optional<Checkpoint>& resume,
                        std::vector<Checkpoint>* checkpoints) {
    MarchSetup setup;
    setup.global = false;
    return march(R0, Q0, u0, params, cfg, horizon_T, setup, resume, checkpoints);
}

SolveResult continue_global(const ScalarField& R0, const ScalarField& Q0,
                            const VectorField& u0, double r_star, double q_star,
                            const ClosureParams& params, const PicardConfig& cfg,
                            double horizon_T,
                            const std::optional<Checkpoint>& resume,
                            std::vector<Checkpoint>* checkpoints) {
    if (!(r_star > 0.0) || !(q_star > 0.0))
        throw ConfigError("constant state (r*, q*) must be positive");
    MarchSetup setup;
    setup.global = true;
    setup.r_star = r_star;
    setup.q_star = q_star;
    return march(R0, Q0, u0, params, cfg, horizon_T, setup, resume, checkpoints);
}

} // namespace bifluid::picard
