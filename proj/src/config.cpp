#include "bifluid/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace bifluid {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

struct Setter {
    std::function<void(RunConfig&, const std::string&)> fn;
};

double parse_double(const std::string& v, const std::string& key, int line) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing chars");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": bad numeric value for '" +
                          key + "': " + v);
    }
}

long long parse_int(const std::string& v, const std::string& key, int line) {
    try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing chars");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": bad integer value for '" +
                          key + "': " + v);
    }
}

bool parse_bool(const std::string& v, const std::string& key, int line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("line " + std::to_string(line) + ": bad boolean for '" + key +
                      "': " + v);
}

} // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    RunConfig cfg;
    cfg.config_hash = fnv1a(content);

    std::istringstream lines(content);
    std::string raw;
    int lineno = 0;
    while (std::getline(lines, raw)) {
        ++lineno;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value': " + raw);
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        const int ln = lineno;

        auto num = [&] { return parse_double(val, key, ln); };
        auto integer = [&] { return parse_int(val, key, ln); };

        if (key == "mode") {
            if (val == "local") cfg.mode = RunMode::local;
            else if (val == "global") cfg.mode = RunMode::global;
            else if (val == "resolvent") cfg.mode = RunMode::resolvent;
            else if (val == "decay-spectrum") cfg.mode = RunMode::decay_spectrum;
            else if (val == "closure") cfg.mode = RunMode::closure;
            else if (val == "mms") cfg.mode = RunMode::mms;
            else
                throw ConfigError("line " + std::to_string(ln) + ": unknown mode " + val);
        } else if (key == "gamma_plus") cfg.closure.gamma_plus = num();
        else if (key == "gamma_minus") cfg.closure.gamma_minus = num();
        else if (key == "mu") cfg.closure.mu = num();
        else if (key == "nu") cfg.closure.nu = num();
        else if (key == "dim") cfg.dim = static_cast<int>(integer());
        else if (key == "nx") cfg.nx = static_cast<std::size_t>(integer());
        else if (key == "ny") cfg.ny = static_cast<std::size_t>(integer());
        else if (key == "x0") cfg.x0 = num();
        else if (key == "x1") cfg.x1 = num();
        else if (key == "y0") cfg.y0 = num();
        else if (key == "y1") cfg.y1 = num();
        else if (key == "boundary") {
            if (val == "dirichlet") cfg.boundary = Boundary::dirichlet;
            else if (val == "periodic") cfg.boundary = Boundary::periodic;
            else
                throw ConfigError("line " + std::to_string(ln) +
                                  ": unknown boundary " + val);
        } else if (key == "r_star") cfg.r_star = num();
        else if (key == "q_star") cfg.q_star = num();
        else if (key == "perturb_amplitude") cfg.perturb_amplitude = num();
        else if (key == "perturb_shape") cfg.perturb_shape = val;
        else if (key == "u0_amplitude") cfg.u0_amplitude = num();
        else if (key == "data_file") cfg.data_file = val;
        else if (key == "closure_r") cfg.closure_r = num();
        else if (key == "closure_q") cfg.closure_q = num();
        else if (key == "closure_tol") cfg.closure_tol = num();
        else if (key == "dt") cfg.dt = num();
        else if (key == "window_T") cfg.window_T = num();
        else if (key == "horizon_T") cfg.horizon_T = num();
        else if (key == "picard_tol") cfg.picard_tol = num();
        else if (key == "picard_max_iter") cfg.picard_max_iter = static_cast<int>(integer());
        else if (key == "ball_M") cfg.ball_M = num();
        else if (key == "delta") cfg.delta = num();
        else if (key == "density_floor") cfg.density_floor = num();
        else if (key == "lambda0") cfg.lambda0 = num();
        else if (key == "norm_p") cfg.norm_p = num();
        else if (key == "norm_q") cfg.norm_q = num();
        else if (key == "decay_C") cfg.decay_C = num();
        else if (key == "beta_weight") cfg.beta_weight = num();
        else if (key == "sector_epsilon") cfg.sector_epsilon = num();
        else if (key == "sector_lambda0") cfg.sector_lambda0 = num();
        else if (key == "sector_radii") cfg.sector_radii = static_cast<std::size_t>(integer());
        else if (key == "sector_rays") cfg.sector_rays = static_cast<std::size_t>(integer());
        else if (key == "sector_max_radius") cfg.sector_max_radius = num();
        else if (key == "power_iter_max") cfg.power_iter_max = static_cast<int>(integer());
        else if (key == "power_iter_tol") cfg.power_iter_tol = num();
        else if (key == "mms_levels") cfg.mms_levels = static_cast<int>(integer());
        else if (key == "mms_nx0") cfg.mms_nx0 = static_cast<std::size_t>(integer());
        else if (key == "mms_T") cfg.mms_T = num();
        else if (key == "out_dir") cfg.out_dir = val;
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer());
        else if (key == "dump_matrix") cfg.dump_matrix = parse_bool(val, key, ln);
        else if (key == "write_checkpoints") cfg.write_checkpoints = parse_bool(val, key, ln);
        else if (key == "restart_file") cfg.restart_file = val;
        else if (key == "snapshot_stride") cfg.snapshot_stride = static_cast<std::size_t>(integer());
        else
            throw ConfigError("line " + std::to_string(ln) + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    closure.validate();
    if (dim != 1 && dim != 2) throw ConfigError("dim must be 1 or 2");
    if (nx < 3 || (dim == 2 && ny < 3))
        throw ConfigError("grids need at least 3 nodes per axis");
    if (!(x1 > x0) || (dim == 2 && !(y1 > y0)))
        throw ConfigError("domain bounds must satisfy lo < hi");
    if (!(r_star > 0.0) || !(q_star > 0.0))
        throw ConfigError("constant state (r_star, q_star) must be positive");
    if (perturb_shape != "none" && perturb_shape != "sine" && perturb_shape != "gauss")
        throw ConfigError("perturb_shape must be none, sine or gauss");
    if (mode == RunMode::local || mode == RunMode::global) {
        picard_config().validate();
        if (!(horizon_T > 0.0)) throw ConfigError("horizon_T must be positive");
        if (1.0 / dt < lambda0)
            throw ConfigError("step refused: 1/dt < lambda0");
    }
    if (mode == RunMode::resolvent) {
        sector_spec(); // throws on bad sector geometry
        if (power_iter_max < 1 || !(power_iter_tol > 0.0))
            throw ConfigError("power iteration settings must be positive");
    }
    if (mode == RunMode::mms && mms_levels < 2)
        throw ConfigError("mms study needs at least 2 refinement levels");
    if (mode == RunMode::closure) {
        if (closure_r < 0.0 || closure_q < 0.0 || closure_r + closure_q <= 0.0)
            throw ConfigError("closure point must satisfy R,Q >= 0 and R+Q > 0");
    }
}

picard::PicardConfig RunConfig::picard_config() const {
    picard::PicardConfig pc;
    pc.dt = dt;
    pc.window_T = window_T;
    pc.max_iter = picard_max_iter;
    pc.tol = picard_tol;
    pc.ball_M = ball_M;
    pc.delta = delta;
    pc.density_floor = density_floor;
    pc.lambda0 = lambda0;
    pc.norm_p = norm_p;
    pc.norm_q = norm_q;
    pc.closure_tol = closure_tol;
    pc.decay_C = decay_C;
    pc.beta_weight = beta_weight;
    return pc;
}

spectra::SectorSpec RunConfig::sector_spec() const {
    spectra::SectorSpec s;
    s.epsilon = sector_epsilon;
    s.lambda0 = sector_lambda0;
    s.n_radii = sector_radii;
    s.n_rays = sector_rays;
    s.max_radius = sector_max_radius;
    if (!(s.epsilon > 0.0) || !(s.epsilon < 1.5707963267948966))
        throw ConfigError("sector_epsilon must lie in (0, pi/2)");
    if (!(s.lambda0 > 0.0)) throw ConfigError("sector_lambda0 must be positive");
    if (s.n_radii < 1 || s.n_rays < 1) throw ConfigError("sector sampling must be nonempty");
    return s;
}

GridPtr RunConfig::make_grid() const {
    if (dim == 1)
        return std::make_shared<Grid>(Grid::line(nx, x0, x1, boundary));
    return std::make_shared<Grid>(Grid::rect(nx, ny, x0, x1, y0, y1, boundary));
}

} // namespace bifluid
