#include "bifluid/io.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

namespace bifluid::io {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path.string());
    return out;
}

json field_to_json(const ScalarField& f) {
    json arr = json::array();
    for (std::size_t i = 0; i < f.size(); ++i) arr.push_back(f[i]);
    return arr;
}

ScalarField field_from_json(const json& arr, GridPtr g) {
    ScalarField f(g);
    if (arr.size() != f.size())
        throw ConfigError("checkpoint field length does not match the grid");
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = arr[i].get<double>();
    return f;
}

} // namespace

void write_fields_csv(const std::filesystem::path& path, const Grid& grid,
                      const std::vector<std::pair<std::string, const ScalarField*>>& cols) {
    std::ofstream out = open_out(path);
    out << "i";
    if (grid.dim() == 2) out << ",j";
    out << ",x";
    if (grid.dim() == 2) out << ",y";
    for (const auto& [name, fp] : cols) out << ',' << name;
    out << '\n';
    const std::size_t nx = grid.nx(), ny = grid.ny();
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            out << i;
            if (grid.dim() == 2) out << ',' << j;
            out << ',' << format_double(grid.x(i));
            if (grid.dim() == 2) out << ',' << format_double(grid.y(j));
            for (const auto& [name, fp] : cols)
                out << ',' << format_double((*fp)[grid.index(i, j)]);
            out << '\n';
        }
}

void write_state_csv(const std::filesystem::path& path, const ScalarField& r,
                     const ScalarField& q, const VectorField& v) {
    std::vector<std::pair<std::string, const ScalarField*>> cols = {
        {"R", &r}, {"Q", &q}, {"u", &v.comp(0)}};
    if (v.dim() == 2) cols.emplace_back("v", &v.comp(1));
    write_fields_csv(path, r.grid(), cols);
}

LoadedState read_state_csv(const std::filesystem::path& path, GridPtr g) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file: " + path.string());
    std::string header;
    if (!std::getline(in, header))
        throw ConfigError("empty data file: " + path.string());
    // column order as written by write_state_csv
    const int skip = g->dim() == 2 ? 4 : 2;
    LoadedState st{ScalarField(g), ScalarField(g), VectorField(g)};
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row >= g->num_nodes())
            throw ConfigError("data file has more rows than grid nodes");
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            auto comma = line.find(',', start);
            parts.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        const std::size_t need = static_cast<std::size_t>(skip) + 2 +
                                 static_cast<std::size_t>(g->dim());
        if (parts.size() < need)
            throw ConfigError("data file row has too few columns");
        st.r[row] = std::stod(parts[static_cast<std::size_t>(skip)]);
        st.q[row] = std::stod(parts[static_cast<std::size_t>(skip) + 1]);
        st.v.comp(0)[row] = std::stod(parts[static_cast<std::size_t>(skip) + 2]);
        if (g->dim() == 2)
            st.v.comp(1)[row] = std::stod(parts[static_cast<std::size_t>(skip) + 3]);
        ++row;
    }
    if (row != g->num_nodes())
        throw ConfigError("data file has fewer rows than grid nodes");
    return st;
}

void write_series_csv(const std::filesystem::path& path,
                      const std::vector<picard::SeriesRow>& rows) {
    std::ofstream out = open_out(path);
    out << "t,mass_r,mass_q,alpha_min,alpha_max,min_total_density,"
           "grad_budget,xdot_density,r_z_margin\n";
    for (const auto& r : rows)
        out << format_double(r.t) << ',' << format_double(r.mass_r) << ','
            << format_double(r.mass_q) << ',' << format_double(r.alpha_min) << ','
            << format_double(r.alpha_max) << ','
            << format_double(r.min_total_density) << ','
            << format_double(r.grad_budget) << ','
            << format_double(r.xdot_density) << ','
            << format_double(r.r_z_margin) << '\n';
}

void write_trace_csv(const std::filesystem::path& path,
                     const picard::IterationTrace& trace) {
    std::ofstream out = open_out(path);
    out << "window,iter,diff_norm,ratio,accepted\n";
    for (const auto& r : trace)
        out << r.window << ',' << r.iter << ',' << format_double(r.diff_norm) << ','
            << format_double(r.ratio) << ',' << (r.accepted ? 1 : 0) << '\n';
}

void write_resolvent_csv(const std::filesystem::path& path,
                         const std::vector<spectra::ResolventSample>& samples) {
    std::ofstream out = open_out(path);
    out << "lambda_re,lambda_im,norm_j0,norm_j1,norm_j2,ok\n";
    for (const auto& s : samples)
        out << format_double(s.lambda.real()) << ',' << format_double(s.lambda.imag())
            << ',' << format_double(s.norm_j0) << ',' << format_double(s.norm_j1)
            << ',' << format_double(s.norm_j2) << ',' << (s.ok ? 1 : 0) << '\n';
}

void write_spectrum_csv(const std::filesystem::path& path,
                        const std::vector<std::complex<double>>& eigenvalues) {
    std::ofstream out = open_out(path);
    out << "re,im\n";
    for (const auto& e : eigenvalues)
        out << format_double(e.real()) << ',' << format_double(e.imag()) << '\n';
}

void save_checkpoint(const std::filesystem::path& path, const picard::Checkpoint& cp) {
    json j;
    j["t"] = cp.t;
    j["window_index"] = cp.window_index;
    j["window_T"] = cp.window_T;
    j["budget_used"] = cp.budget_used;
    j["r"] = field_to_json(cp.r);
    j["q"] = field_to_json(cp.q);
    const int d = cp.v.dim();
    j["v"] = json::array();
    for (int c = 0; c < d; ++c) j["v"].push_back(field_to_json(cp.v.comp(c)));
    j["k"] = json::array();
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) j["k"].push_back(field_to_json(cp.k.comp(a, b)));
    j["k2"] = json::array();
    for (int l = 0; l < d; ++l)
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                j["k2"].push_back(field_to_json(cp.k2.slice(l).comp(a, b)));
    std::ofstream out = open_out(path);
    out << j.dump(1) << '\n';
}

picard::Checkpoint load_checkpoint(const std::filesystem::path& path, GridPtr g) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
    json j;
    in >> j;
    picard::Checkpoint cp;
    cp.t = j.at("t").get<double>();
    cp.window_index = j.at("window_index").get<int>();
    cp.window_T = j.at("window_T").get<double>();
    cp.budget_used = j.at("budget_used").get<double>();
    cp.r = field_from_json(j.at("r"), g);
    cp.q = field_from_json(j.at("q"), g);
    const int d = g->dim();
    cp.v = VectorField(g);
    for (int c = 0; c < d; ++c)
        cp.v.comp(c) = field_from_json(j.at("v").at(static_cast<std::size_t>(c)), g);
    cp.k = lagrangian::MatrixField(g);
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            cp.k.comp(a, b) = field_from_json(j.at("k").at(idx++), g);
    cp.k2 = lagrangian::Tensor3Field(g);
    idx = 0;
    for (int l = 0; l < d; ++l)
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                cp.k2.slice(l).comp(a, b) = field_from_json(j.at("k2").at(idx++), g);
    return cp;
}

} // namespace bifluid::io
