#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "bifluid/closure.hpp"
#include "bifluid/picard.hpp"
#include "bifluid/spectra.hpp"

// Flat key = value run configuration. One assignment per line, '#' starts a
// comment, unknown keys are rejected with their line number. All referenced
// module constraints are validated at load time.

namespace bifluid {

enum class RunMode { local, global, resolvent, decay_spectrum, closure, mms };

struct RunConfig {
    RunMode mode = RunMode::local;

    ClosureParams closure;

    // grid
    int dim = 1;
    std::size_t nx = 65, ny = 65;
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    Boundary boundary = Boundary::dirichlet;

    // initial data: constants plus an optional proportional density
    // perturbation (keeps q* sigma0 = r* eta0) and a Dirichlet velocity bump
    double r_star = 1.0, q_star = 1.0;
    double perturb_amplitude = 0.0;
    std::string perturb_shape = "sine"; // none | sine | gauss
    double u0_amplitude = 0.0;
    std::string data_file; // optional CSV with initial fields

    // closure-eval mode inputs
    double closure_r = 1.0, closure_q = 1.0;
    double closure_tol = 1e-12;

    // numerics
    double dt = 1e-3;
    double window_T = 0.1;
    double horizon_T = 1.0;
    double picard_tol = 1e-10;
    int picard_max_iter = 25;
    double ball_M = 100.0;
    double delta = 0.1;
    double density_floor = 1e-3;
    double lambda0 = 1.0;
    double norm_p = 2.0, norm_q = 2.0;
    double decay_C = 10.0;
    double beta_weight = 0.0;

    // sector sweep
    double sector_epsilon = 0.7853981633974483;
    double sector_lambda0 = 1.0;
    std::size_t sector_radii = 16;
    std::size_t sector_rays = 9;
    double sector_max_radius = 1e3;
    int power_iter_max = 50;
    double power_iter_tol = 1e-6;

    // mms study
    int mms_levels = 3;
    std::size_t mms_nx0 = 17;
    double mms_T = 0.25;

    std::string out_dir = "out";
    std::uint64_t seed = 12345;
    bool dump_matrix = false;
    bool write_checkpoints = true;
    std::string restart_file;
    std::size_t snapshot_stride = 0; // 0 = window boundaries only

    std::uint64_t config_hash = 0; // FNV-1a of the config file bytes

    static RunConfig from_file(const std::filesystem::path& path);
    void validate() const;

    picard::PicardConfig picard_config() const;
    spectra::SectorSpec sector_spec() const;
    GridPtr make_grid() const;
};

std::uint64_t fnv1a(const std::string& bytes);

} // namespace bifluid
