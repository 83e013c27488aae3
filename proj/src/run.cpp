#include "bifluid/run.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numbers>

#include "bifluid/io.hpp"
#include "bifluid/kernels.hpp"
#include "bifluid/mms.hpp"

namespace bifluid {

using nlohmann::json;

namespace {

std::filesystem::path resolve_out_dir(const RunConfig& cfg) {
    std::filesystem::path p = cfg.out_dir;
    if (p.is_relative()) {
        if (const char* root = std::getenv("BIFLUID_OUT_ROOT")) p = root / p;
    }
    std::filesystem::create_directories(p);
    return p;
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path.string());
    out << j.dump(1) << '\n';
}

void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg,
                    const char* mode_name) {
    json j;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash));
    j["config_hash"] = hash;
    j["project"] = "bifluid";
    j["version"] = "0.1.0";
    j["mode"] = mode_name;
    j["kernels"] = kernels::backend_name();
    j["grid"] = {{"dim", cfg.dim},
                 {"nx", cfg.nx},
                 {"ny", cfg.dim == 2 ? cfg.ny : 1},
                 {"boundary", cfg.boundary == Boundary::periodic ? "periodic"
                                                                 : "dirichlet"}};
    write_json(dir / "manifest.json", j);
}

json closure_eval_json(double R, double Q, const ClosureParams& params, double tol) {
    double Z = solve_z(R, Q, params, tol);
    ClosureDerivs der = closure_derivatives(Z, R, params);
    OmegaCoeffs w = omega_coefficients(Z, R, params);
    PhasePoint pt = recover_phases(R, Q, Z, params);
    json j;
    j["R"] = R;
    j["Q"] = Q;
    j["Z"] = Z;
    j["alpha"] = pt.alpha;
    j["p"] = pt.p;
    j["rho_plus"] = pt.rho_plus;
    j["rho_minus"] = pt.minus_vacuum ? json(nullptr) : json(pt.rho_minus);
    j["minus_vacuum"] = pt.minus_vacuum;
    j["dZ_dR"] = der.dZ_dR;
    j["dZ_dQ"] = der.dZ_dQ;
    j["omega1"] = w.omega1;
    j["omega2"] = w.omega2;
    return j;
}

json norm_report_json(const RunConfig& cfg, const picard::SolveResult& res) {
    const auto& n = res.first_window_norms;
    json j;
    j["x_norm"] = {{"v_LpW2q", n.v_LpW2q},
                   {"vt_LpLq", n.vt_LpLq},
                   {"sig_eta_W1pW1q", n.sig_eta_W1pW1q},
                   {"total", n.x_norm()}};
    j["xdot"] = {{"grad_sig_eta_LpLq", n.grad_sig_eta_LpLq},
                 {"dt_sig_eta_LpW1q", n.dt_sig_eta_LpW1q},
                 {"seminorm", n.xdot_seminorm()}};
    j["holder_T_factor"] = n.holder_T_factor;
    j["norm_p"] = cfg.norm_p;
    j["norm_q"] = cfg.norm_q;
    j["grad_budget"] = res.grad_budget_total;
    j["delta"] = cfg.delta;
    j["budget_ok"] = res.grad_budget_total <= cfg.delta;
    j["final_time"] = res.final_time;
    j["windows"] = res.windows.size();
    j["blowup_flag"] = res.blowup_flag;
    j["aborted"] = res.aborted;
    if (res.aborted) j["abort_reason"] = res.abort_reason;

    if (!res.series.empty()) {
        double amin = 1.0, amax = 0.0, rz = 1e300;
        double m0r = res.series.front().mass_r, m0q = res.series.front().mass_q;
        double drift_r = 0.0, drift_q = 0.0;
        for (const auto& row : res.series) {
            amin = std::min(amin, row.alpha_min);
            amax = std::max(amax, row.alpha_max);
            rz = std::min(rz, row.r_z_margin);
            if (m0r != 0.0)
                drift_r = std::max(drift_r, std::fabs(row.mass_r - m0r) / std::fabs(m0r));
            if (m0q != 0.0)
                drift_q = std::max(drift_q, std::fabs(row.mass_q - m0q) / std::fabs(m0q));
        }
        j["alpha_min"] = amin;
        j["alpha_max"] = amax;
        j["min_rz_margin"] = rz;
        j["mass_r_initial"] = m0r;
        j["mass_q_initial"] = m0q;
        j["mass_r_rel_drift"] = drift_r;
        j["mass_q_rel_drift"] = drift_q;
    }
    return j;
}

void write_snapshots(const std::filesystem::path& dir, const RunConfig& cfg,
                     const picard::SolveResult& res) {
    std::filesystem::create_directories(dir / "snapshots");
    int counter = 0;
    auto dump = [&](const picard::WindowResult& w, std::size_t level, double t) {
        ScalarField r = w.frozen.r0 + w.traj.levels[level].sigma;
        ScalarField q = w.frozen.q0 + w.traj.levels[level].eta;
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%04d.csv", counter++);
        io::write_state_csv(dir / "snapshots" / name, r, q, w.traj.levels[level].v);
        (void)t;
    };
    if (res.windows.empty()) return;
    dump(res.windows.front(), 0, res.windows.front().traj.t0);
    for (const auto& w : res.windows) {
        if (cfg.snapshot_stride > 0)
            for (std::size_t n = cfg.snapshot_stride; n + 1 < w.traj.levels.size();
                 n += cfg.snapshot_stride)
                dump(w, n, w.traj.time(n));
        dump(w, w.traj.levels.size() - 1, w.traj.time(w.traj.levels.size() - 1));
    }
}

int run_simulation(const RunConfig& cfg, const std::filesystem::path& dir) {
    GridPtr grid = cfg.make_grid();
    InitialData data = make_initial_data(cfg, grid);
    picard::PicardConfig pc = cfg.picard_config();

    std::optional<picard::Checkpoint> resume;
    if (!cfg.restart_file.empty())
        resume = io::load_checkpoint(cfg.restart_file, grid);
    std::vector<picard::Checkpoint> checkpoints;

    if (cfg.dump_matrix) {
        lagrangian::Frozen frozen =
            cfg.mode == RunMode::global
                ? lagrangian::Frozen::from_constants(grid, cfg.r_star, cfg.q_star,
                                                     cfg.closure, cfg.closure_tol)
                : lagrangian::Frozen::from_fields(data.R0, data.Q0, cfg.closure,
                                                  cfg.closure_tol);
        linear_core::EllipticOperator op = linear_core::EllipticOperator::assemble(
            linear_core::LinearCoeffs::from_frozen(frozen), cfg.closure, cfg.dt,
            cfg.lambda0, cfg.density_floor);
        std::ofstream mops(dir / "operator.txt");
        op.dump_matrix(mops);
    }

    picard::SolveResult res;
    if (cfg.mode == RunMode::local)
        res = picard::solve_local(data.R0, data.Q0, data.u0, cfg.closure, pc,
                                  cfg.horizon_T, resume,
                                  cfg.write_checkpoints ? &checkpoints : nullptr);
    else
        res = picard::continue_global(data.R0, data.Q0, data.u0, cfg.r_star,
                                      cfg.q_star, cfg.closure, pc, cfg.horizon_T,
                                      resume,
                                      cfg.write_checkpoints ? &checkpoints : nullptr);

    io::write_trace_csv(dir / "trace.csv", res.trace);
    io::write_series_csv(dir / "series.csv", res.series);
    write_snapshots(dir, cfg, res);
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_%04zu.json", i);
        io::save_checkpoint(dir / name, checkpoints[i]);
    }

    json report = norm_report_json(cfg, res);
    if (cfg.mode == RunMode::global && res.series.size() >= 4) {
        std::vector<double> ts, dens;
        for (const auto& row : res.series)
            if (row.t > 0.0) {
                ts.push_back(row.t);
                dens.push_back(row.xdot_density);
            }
        diagnostics::DecayFit fit = diagnostics::fit_decay(ts, dens);
        report["beta_fit"] = fit.beta_fit;
        report["beta_fit_residual"] = fit.residual;
        report["beta_fit_reliable"] = fit.reliable;

        ScalarField dr = data.R0 - ScalarField(grid, cfg.r_star);
        ScalarField dq = data.Q0 - ScalarField(grid, cfg.q_star);
        double eps_hat = diagnostics::w1q_norm(dr, cfg.norm_q) +
                         diagnostics::w1q_norm(dq, cfg.norm_q) +
                         diagnostics::besov_proxy(data.u0, cfg.norm_q);
        diagnostics::QuadraticDichotomy roots =
            diagnostics::dichotomy_roots(cfg.decay_C, eps_hat);
        report["eps_hat"] = eps_hat;
        report["weighted_xdot_norm"] = res.weighted_xdot_norm;
        report["dichotomy"] = {{"C", cfg.decay_C},
                               {"admissible", roots.admissible},
                               {"x1", roots.x1},
                               {"x2", roots.x2},
                               {"below_x1", roots.admissible &&
                                                res.weighted_xdot_norm <= roots.x1}};
    }
    write_json(dir / "norms.json", report);

    if (res.aborted) {
        json fail;
        fail["error"] = res.abort_reason;
        fail["exit_code"] = exit_invariant_violation;
        write_json(dir / "failure.json", fail);
        std::cerr << "run aborted: " << res.abort_reason << "\n";
        return exit_invariant_violation;
    }
    if (res.blowup_flag) {
        json fail;
        fail["error"] = "weighted seminorm exceeded twice the small-data bound";
        fail["exit_code"] = exit_invariant_violation;
        write_json(dir / "failure.json", fail);
        std::cerr << "run flagged blow-up: data not small enough\n";
        return exit_invariant_violation;
    }
    if (res.grad_budget_total > cfg.delta) {
        // The history advance throws before this can normally trigger.
        return exit_invariant_violation;
    }
    return exit_ok;
}

int run_resolvent(const RunConfig& cfg, const std::filesystem::path& dir) {
    GridPtr grid = cfg.make_grid();
    spectra::ConstantCoeffs cc = spectra::ConstantCoeffs::from_state(
        cfg.r_star, cfg.q_star, cfg.closure, cfg.closure_tol);
    spectra::PowerIterOptions opts;
    opts.max_iter = cfg.power_iter_max;
    opts.tol = cfg.power_iter_tol;
    opts.seed = cfg.seed;
    spectra::SweepResult res =
        spectra::sweep_sector(cc, cfg.closure, *grid, cfg.sector_spec(), opts);
    io::write_resolvent_csv(dir / "resolvent.csv", res.samples);
    json j;
    j["sup_j0"] = res.sup_j0;
    j["sup_j1"] = res.sup_j1;
    j["sup_j2"] = res.sup_j2;
    j["samples"] = res.samples.size();
    j["failures"] = res.failures;
    j["omega1"] = cc.omega1;
    j["omega2"] = cc.omega2;
    write_json(dir / "resolvent_summary.json", j);
    std::cout << j.dump(1) << '\n';
    return res.failures == 0 ? exit_ok : exit_solver_failure;
}

int run_decay_spectrum(const RunConfig& cfg, const std::filesystem::path& dir) {
    GridPtr grid = cfg.make_grid();
    spectra::ConstantCoeffs cc = spectra::ConstantCoeffs::from_state(
        cfg.r_star, cfg.q_star, cfg.closure, cfg.closure_tol);
    spectra::SpectrumResult res = spectra::decay_spectrum(cc, cfg.closure, *grid);
    io::write_spectrum_csv(dir / "spectrum.csv", res.eigenvalues);
    json j;
    j["beta_hat"] = res.beta_hat;
    j["kernel_dim"] = res.kernel_dim;
    j["kernel_dim_expected"] = res.kernel_dim_expected;
    j["converged"] = res.converged;
    j["omega1"] = cc.omega1;
    j["omega2"] = cc.omega2;
    write_json(dir / "spectrum_summary.json", j);
    std::cout << j.dump(1) << '\n';
    return res.converged ? exit_ok : exit_solver_failure;
}

int run_mms(const RunConfig& cfg, const std::filesystem::path& dir) {
    mms::StudyResult spatial =
        mms::spatial_study(cfg.dim, cfg.mms_levels, cfg.mms_nx0, cfg.mms_T, cfg.closure);
    mms::StudyResult temporal = mms::temporal_study(
        cfg.dim, cfg.mms_levels, /*nx=*/129, /*dt0=*/cfg.mms_T / 8.0, cfg.mms_T,
        cfg.closure);

    std::ofstream csv(dir / "mms.csv");
    csv << "study,h,dt,err_sigma,err_eta,err_v,err_total\n";
    for (const auto& r : spatial.rows)
        csv << "spatial," << io::format_double(r.h) << ',' << io::format_double(r.dt)
            << ',' << io::format_double(r.err_sigma) << ','
            << io::format_double(r.err_eta) << ',' << io::format_double(r.err_v)
            << ',' << io::format_double(r.err_total) << '\n';
    for (const auto& r : temporal.rows)
        csv << "temporal," << io::format_double(r.h) << ',' << io::format_double(r.dt)
            << ',' << io::format_double(r.err_sigma) << ','
            << io::format_double(r.err_eta) << ',' << io::format_double(r.err_v)
            << ',' << io::format_double(r.err_total) << '\n';

    json j;
    j["spatial_order"] = spatial.observed_order;
    j["temporal_order"] = temporal.observed_order;
    write_json(dir / "mms_summary.json", j);
    std::cout << j.dump(1) << '\n';
    return exit_ok;
}

} // namespace

InitialData make_initial_data(const RunConfig& cfg, GridPtr grid) {
    if (!cfg.data_file.empty()) {
        io::LoadedState st = io::read_state_csv(cfg.data_file, grid);
        return {std::move(st.r), std::move(st.q), std::move(st.v)};
    }
    InitialData d{ScalarField(grid, cfg.r_star), ScalarField(grid, cfg.q_star),
                  VectorField(grid)};
    const Grid& g = *grid;
    const double pi = std::numbers::pi;
    const double Lx = g.hi(0) - g.lo(0);
    const double Ly = g.dim() == 2 ? g.hi(1) - g.lo(1) : 1.0;
    auto shape = [&](double x, double y) {
        double sx = (x - g.lo(0)) / Lx;
        double sy = g.dim() == 2 ? (y - g.lo(1)) / Ly : 0.25;
        if (cfg.perturb_shape == "none") return 0.0;
        if (cfg.perturb_shape == "gauss") {
            double dx = sx - 0.5, dy = sy - 0.5;
            double r2 = dx * dx + (g.dim() == 2 ? dy * dy : 0.0);
            return std::exp(-r2 / 0.02);
        }
        double s = std::sin(2.0 * pi * sx);
        if (g.dim() == 2) s *= std::sin(2.0 * pi * sy);
        return s;
    };
    auto bump = [&](double x, double y) {
        // Dirichlet-compatible velocity profile.
        double sx = (x - g.lo(0)) / Lx;
        double s = std::sin(pi * sx);
        if (g.dim() == 2) {
            double sy = (y - g.lo(1)) / Ly;
            s *= std::sin(pi * sy);
        }
        return s;
    };
    for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) {
            std::size_t node = g.index(i, j);
            double x = g.x(i), y = g.y(j);
            // Proportional density perturbation keeps q* sigma0 = r* eta0,
            // so the data sit in the decaying subspace of the linearization.
            double s = cfg.perturb_amplitude * shape(x, y);
            d.R0[node] = cfg.r_star * (1.0 + s);
            d.Q0[node] = cfg.q_star * (1.0 + s);
            for (int c = 0; c < g.dim(); ++c)
                d.u0.comp(c)[node] = cfg.u0_amplitude * bump(x, y);
        }
    if (g.boundary() == Boundary::dirichlet) d.u0.clamp_boundary();
    return d;
}

int run(const RunConfig& cfg) {
    try {
        std::filesystem::path dir = resolve_out_dir(cfg);
        const char* mode_name = "local";
        switch (cfg.mode) {
        case RunMode::local: mode_name = "local"; break;
        case RunMode::global: mode_name = "global"; break;
        case RunMode::resolvent: mode_name = "resolvent"; break;
        case RunMode::decay_spectrum: mode_name = "decay-spectrum"; break;
        case RunMode::closure: mode_name = "closure"; break;
        case RunMode::mms: mode_name = "mms"; break;
        }
        write_manifest(dir, cfg, mode_name);

        switch (cfg.mode) {
        case RunMode::local:
        case RunMode::global:
            return run_simulation(cfg, dir);
        case RunMode::resolvent:
            return run_resolvent(cfg, dir);
        case RunMode::decay_spectrum:
            return run_decay_spectrum(cfg, dir);
        case RunMode::closure: {
            json j = closure_eval_json(cfg.closure_r, cfg.closure_q, cfg.closure,
                                       cfg.closure_tol);
            write_json(dir / "closure.json", j);
            std::cout << j.dump() << '\n';
            return exit_ok;
        }
        case RunMode::mms:
            return run_mms(cfg, dir);
        }
        return exit_ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return exit_invariant_violation;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return exit_solver_failure;
    }
}

} // namespace bifluid
