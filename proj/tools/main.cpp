// Command-line front end. Subcommands map one-to-one onto run modes; the
// subcommand overrides the mode key of the config file.

#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>

#include "bifluid/run.hpp"

using namespace bifluid;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string restart;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool restartable = false) {
    cmd->add_option("--config", opts.config_path, "run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
    if (restartable)
        cmd->add_option("--restart", opts.restart, "checkpoint file to resume from");
}

int run_mode(const CommonOpts& opts, RunMode mode) {
    RunConfig cfg = RunConfig::from_file(opts.config_path);
    cfg.mode = mode;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (!opts.restart.empty()) cfg.restart_file = opts.restart;
    cfg.validate();
    return run(cfg);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-fluid flow laboratory with algebraic pressure closure"};
    app.require_subcommand(1);

    // closure eval --r --q --gamma-plus --gamma-minus
    auto* closure_cmd = app.add_subcommand("closure", "pointwise closure queries");
    auto* eval_cmd = closure_cmd->add_subcommand("eval", "solve Z(R,Q) and report");
    double er = 0.0, eq = 0.0, egp = 3.0, egm = 1.5, emu = 1.0, enu = 0.0,
           etol = 1e-12;
    eval_cmd->add_option("--r", er, "partial density R")->required();
    eval_cmd->add_option("--q", eq, "partial density Q")->required();
    eval_cmd->add_option("--gamma-plus", egp, "plus-phase exponent")->required();
    eval_cmd->add_option("--gamma-minus", egm, "minus-phase exponent")->required();
    eval_cmd->add_option("--mu", emu, "shear viscosity");
    eval_cmd->add_option("--nu", enu, "bulk viscosity");
    eval_cmd->add_option("--tol", etol, "closure solve tolerance");
    closure_cmd->require_subcommand(1);

    CommonOpts sim_opts, decay_opts, res_opts, spec_opts, mms_opts;
    auto* sim_cmd = app.add_subcommand("simulate", "local solve over Picard windows");
    add_common(sim_cmd, sim_opts, /*restartable=*/true);
    auto* decay_cmd =
        app.add_subcommand("decay", "global continuation near constants with decay fit");
    add_common(decay_cmd, decay_opts, /*restartable=*/true);
    auto* res_cmd = app.add_subcommand("resolvent", "sector sweep of resolvent norms");
    add_common(res_cmd, res_opts);
    auto* spec_cmd =
        app.add_subcommand("decay-spectrum", "generator spectrum and beta_hat");
    add_common(spec_cmd, spec_opts);
    auto* mms_cmd =
        app.add_subcommand("mms", "manufactured-solution convergence study");
    add_common(mms_cmd, mms_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (eval_cmd->parsed()) {
            ClosureParams params{egp, egm, emu, enu};
            params.validate();
            double Z = solve_z(er, eq, params, etol);
            ClosureDerivs der = closure_derivatives(Z, er, params);
            OmegaCoeffs w = omega_coefficients(Z, er, params);
            PhasePoint pt = recover_phases(er, eq, Z, params);
            nlohmann::json j;
            j["R"] = er;
            j["Q"] = eq;
            j["Z"] = Z;
            j["alpha"] = pt.alpha;
            j["p"] = pt.p;
            j["rho_plus"] = pt.rho_plus;
            j["rho_minus"] =
                pt.minus_vacuum ? nlohmann::json(nullptr) : nlohmann::json(pt.rho_minus);
            j["minus_vacuum"] = pt.minus_vacuum;
            j["dZ_dR"] = der.dZ_dR;
            j["dZ_dQ"] = der.dZ_dQ;
            j["omega1"] = w.omega1;
            j["omega2"] = w.omega2;
            std::cout << j.dump() << '\n';
            return exit_ok;
        }
        if (sim_cmd->parsed()) return run_mode(sim_opts, RunMode::local);
        if (decay_cmd->parsed()) return run_mode(decay_opts, RunMode::global);
        if (res_cmd->parsed()) return run_mode(res_opts, RunMode::resolvent);
        if (spec_cmd->parsed()) return run_mode(spec_opts, RunMode::decay_spectrum);
        if (mms_cmd->parsed()) return run_mode(mms_opts, RunMode::mms);
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
    return exit_ok;
}
