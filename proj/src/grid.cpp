#include "bifluid/grid.hpp"

#include <cmath>

#include "bifluid/kernels.hpp"

namespace bifluid {

Grid::Grid(int dim, std::array<std::size_t, 2> extents, std::array<double, 2> lo,
           std::array<double, 2> hi, Boundary boundary)
    : dim_(dim), n_(extents), lo_(lo), hi_(hi), bc_(boundary) {
    if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
    if (dim == 1) n_[1] = 1;
    for (int a = 0; a < dim; ++a) {
        if (n_[static_cast<std::size_t>(a)] < 3)
            throw ConfigError("grid needs at least 3 nodes per axis");
        if (!(hi_[static_cast<std::size_t>(a)] > lo_[static_cast<std::size_t>(a)]))
            throw ConfigError("grid domain bounds must satisfy lo < hi");
    }
    for (std::size_t a = 0; a < 2; ++a) {
        double len = hi_[a] - lo_[a];
        std::size_t cells =
            bc_ == Boundary::periodic ? n_[a] : (n_[a] > 1 ? n_[a] - 1 : 1);
        h_[a] = (static_cast<int>(a) < dim) ? len / static_cast<double>(cells) : 1.0;
    }

    const std::size_t nx = n_[0], ny = (dim_ == 2) ? n_[1] : 1;
    if (bc_ == Boundary::dirichlet) {
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i) {
                bool bdry = (i == 0 || i + 1 == nx);
                if (dim_ == 2) bdry = bdry || (j == 0 || j + 1 == ny);
                if (bdry) boundary_nodes_.push_back(j * nx + i);
            }
    }

    quad_weights_.resize(nx * ny);
    auto w1 = [&](std::size_t i, std::size_t n) {
        if (bc_ == Boundary::periodic) return 1.0;
        return (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    };
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            double w = w1(i, nx) * h_[0];
            if (dim_ == 2) w *= w1(j, ny) * h_[1];
            quad_weights_[j * nx + i] = w;
        }
}

bool Grid::is_boundary_node(std::size_t flat) const {
    if (bc_ == Boundary::periodic) return false;
    std::size_t i = flat % n_[0];
    std::size_t j = flat / n_[0];
    bool b = (i == 0 || i + 1 == n_[0]);
    if (dim_ == 2) b = b || (j == 0 || j + 1 == n_[1]);
    return b;
}

bool Grid::same_as(const Grid& o) const {
    return dim_ == o.dim_ && n_ == o.n_ && lo_ == o.lo_ && hi_ == o.hi_ &&
           bc_ == o.bc_;
}

void VectorField::clamp_boundary() {
    for (auto& c : comp_)
        for (std::size_t b : grid_->boundary_nodes()) c[b] = 0.0;
}

void check_same_grid(const Grid& a, const Grid& b) {
    if (!a.same_as(b)) throw ConfigError("fields live on different grids");
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    check_same_grid(a.grid(), b.grid());
    ScalarField out(a.grid_ptr());
    kernels::ops().axpby(1.0, a.data(), 1.0, b.data(), out.data(), a.size());
    return out;
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    check_same_grid(a.grid(), b.grid());
    ScalarField out(a.grid_ptr());
    kernels::ops().axpby(1.0, a.data(), -1.0, b.data(), out.data(), a.size());
    return out;
}

ScalarField operator*(double a, const ScalarField& f) {
    ScalarField out(f.grid_ptr());
    kernels::ops().axpby(a, f.data(), 0.0, f.data(), out.data(), f.size());
    return out;
}

ScalarField pointwise_mul(const ScalarField& a, const ScalarField& b) {
    check_same_grid(a.grid(), b.grid());
    ScalarField out(a.grid_ptr());
    kernels::ops().mul(a.data(), b.data(), out.data(), a.size());
    return out;
}

void add_scaled(ScalarField& dst, double a, const ScalarField& src) {
    check_same_grid(dst.grid(), src.grid());
    kernels::ops().axpy(a, src.data(), dst.data(), dst.size());
}

VectorField operator+(const VectorField& a, const VectorField& b) {
    check_same_grid(a.grid(), b.grid());
    VectorField out(a.grid_ptr(), a.dirichlet() && b.dirichlet());
    for (int c = 0; c < a.dim(); ++c)
        kernels::ops().axpby(1.0, a.comp(c).data(), 1.0, b.comp(c).data(),
                             out.comp(c).data(), a.comp(c).size());
    return out;
}

VectorField operator-(const VectorField& a, const VectorField& b) {
    check_same_grid(a.grid(), b.grid());
    VectorField out(a.grid_ptr(), a.dirichlet() && b.dirichlet());
    for (int c = 0; c < a.dim(); ++c)
        kernels::ops().axpby(1.0, a.comp(c).data(), -1.0, b.comp(c).data(),
                             out.comp(c).data(), a.comp(c).size());
    return out;
}

VectorField operator*(double a, const VectorField& f) {
    VectorField out(f.grid_ptr(), f.dirichlet());
    for (int c = 0; c < f.dim(); ++c)
        kernels::ops().axpby(a, f.comp(c).data(), 0.0, f.comp(c).data(),
                             out.comp(c).data(), f.comp(c).size());
    return out;
}

void add_scaled(VectorField& dst, double a, const VectorField& src) {
    check_same_grid(dst.grid(), src.grid());
    for (int c = 0; c < dst.dim(); ++c)
        kernels::ops().axpy(a, src.comp(c).data(), dst.comp(c).data(),
                            dst.comp(c).size());
}

namespace ops {

namespace {

// First derivative along x of one logical row of length n.
void d1_row(const double* f, double* out, std::size_t n, double h, Boundary bc) {
    const auto& k = kernels::ops();
    const double c = 1.0 / (2.0 * h);
    if (bc == Boundary::periodic) {
        k.central_diff(f, f + 2, c, out + 1, n - 2);
        out[0] = (f[1] - f[n - 1]) * c;
        out[n - 1] = (f[0] - f[n - 2]) * c;
    } else {
        k.central_diff(f, f + 2, c, out + 1, n - 2);
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * c;
        out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * c;
    }
}

// Second derivative along x of one logical row. The one-sided boundary
// stencil needs 4 points; on a minimal 3-node row it falls back to the
// centered 3-point value.
void d2_row(const double* f, double* out, std::size_t n, double h, Boundary bc) {
    const auto& k = kernels::ops();
    const double c = 1.0 / (h * h);
    k.second_diff(f, f + 1, f + 2, c, out + 1, n - 2);
    if (bc == Boundary::periodic) {
        out[0] = (f[n - 1] - 2.0 * f[0] + f[1]) * c;
        out[n - 1] = (f[n - 2] - 2.0 * f[n - 1] + f[0]) * c;
    } else if (n >= 4) {
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * c;
        out[n - 1] =
            (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * c;
    } else {
        out[0] = out[n - 1] = (f[0] - 2.0 * f[1] + f[2]) * c;
    }
}

} // namespace

ScalarField d1(const ScalarField& f, int axis) {
    const Grid& g = f.grid();
    ScalarField out(f.grid_ptr());
    const std::size_t nx = g.nx(), ny = g.ny();
    if (axis == 0) {
        for (std::size_t j = 0; j < ny; ++j)
            d1_row(f.data() + j * nx, out.data() + j * nx, nx, g.hx(), g.boundary());
        return out;
    }
    if (g.dim() != 2) throw ConfigError("d/dy on a 1-d field");
    const auto& k = kernels::ops();
    const double c = 1.0 / (2.0 * g.hy());
    auto row = [&](std::size_t j) { return f.data() + j * nx; };
    for (std::size_t j = 1; j + 1 < ny; ++j)
        k.central_diff(row(j - 1), row(j + 1), c, out.data() + j * nx, nx);
    if (g.boundary() == Boundary::periodic) {
        k.central_diff(row(ny - 1), row(1), c, out.data(), nx);
        k.central_diff(row(ny - 2), row(0), c, out.data() + (ny - 1) * nx, nx);
    } else {
        k.combine3(-3.0 * c, row(0), 4.0 * c, row(1), -c, row(2), out.data(), nx);
        k.combine3(3.0 * c, row(ny - 1), -4.0 * c, row(ny - 2), c, row(ny - 3),
                   out.data() + (ny - 1) * nx, nx);
    }
    return out;
}

ScalarField d2(const ScalarField& f, int axis) {
    const Grid& g = f.grid();
    ScalarField out(f.grid_ptr());
    const std::size_t nx = g.nx(), ny = g.ny();
    if (axis == 0) {
        for (std::size_t j = 0; j < ny; ++j)
            d2_row(f.data() + j * nx, out.data() + j * nx, nx, g.hx(), g.boundary());
        return out;
    }
    if (g.dim() != 2) throw ConfigError("d2/dy2 on a 1-d field");
    const auto& k = kernels::ops();
    const double c = 1.0 / (g.hy() * g.hy());
    auto row = [&](std::size_t j) { return f.data() + j * nx; };
    for (std::size_t j = 1; j + 1 < ny; ++j)
        k.second_diff(row(j - 1), row(j), row(j + 1), c, out.data() + j * nx, nx);
    if (g.boundary() == Boundary::periodic) {
        k.second_diff(row(ny - 1), row(0), row(1), c, out.data(), nx);
        k.second_diff(row(ny - 2), row(ny - 1), row(0), c,
                      out.data() + (ny - 1) * nx, nx);
    } else if (ny >= 4) {
        k.combine4(2.0 * c, row(0), -5.0 * c, row(1), 4.0 * c, row(2), -c, row(3),
                   out.data(), nx);
        k.combine4(2.0 * c, row(ny - 1), -5.0 * c, row(ny - 2), 4.0 * c,
                   row(ny - 3), -c, row(ny - 4), out.data() + (ny - 1) * nx, nx);
    } else {
        k.second_diff(row(0), row(1), row(2), c, out.data(), nx);
        k.second_diff(row(0), row(1), row(2), c, out.data() + (ny - 1) * nx, nx);
    }
    return out;
}

ScalarField dx(const ScalarField& f) { return d1(f, 0); }
ScalarField dy(const ScalarField& f) { return d1(f, 1); }
ScalarField dxx(const ScalarField& f) { return d2(f, 0); }
ScalarField dyy(const ScalarField& f) { return d2(f, 1); }
ScalarField dxy(const ScalarField& f) { return d1(d1(f, 1), 0); }

VectorField grad(const ScalarField& f) {
    VectorField out(f.grid_ptr(), /*dirichlet=*/false);
    out.comp(0) = d1(f, 0);
    if (f.grid().dim() == 2) out.comp(1) = d1(f, 1);
    return out;
}

ScalarField divergence(const VectorField& v) {
    ScalarField out = d1(v.comp(0), 0);
    if (v.dim() == 2) {
        ScalarField vy = d1(v.comp(1), 1);
        kernels::ops().axpy(1.0, vy.data(), out.data(), out.size());
    }
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    ScalarField out = d2(f, 0);
    if (f.grid().dim() == 2) {
        ScalarField fyy = d2(f, 1);
        kernels::ops().axpy(1.0, fyy.data(), out.data(), out.size());
    }
    return out;
}

VectorField laplacian(const VectorField& v) {
    VectorField out(v.grid_ptr(), /*dirichlet=*/false);
    for (int c = 0; c < v.dim(); ++c) out.comp(c) = laplacian(v.comp(c));
    return out;
}

VectorField grad_div(const VectorField& v) {
    VectorField out(v.grid_ptr(), /*dirichlet=*/false);
    if (v.dim() == 1) {
        out.comp(0) = d2(v.comp(0), 0);
        return out;
    }
    ScalarField vxx = d2(v.comp(0), 0);
    ScalarField vyy = d2(v.comp(1), 1);
    ScalarField vxy = dxy(v.comp(1)); // d/dx d/dy v_y
    ScalarField uxy = dxy(v.comp(0)); // d/dx d/dy v_x
    const auto& k = kernels::ops();
    k.axpby(1.0, vxx.data(), 1.0, vxy.data(), out.comp(0).data(), vxx.size());
    k.axpby(1.0, uxy.data(), 1.0, vyy.data(), out.comp(1).data(), vyy.size());
    return out;
}

double integrate(const ScalarField& f) {
    const auto& w = f.grid().quad_weights();
    return kernels::ops().dot(w.data(), f.data(), f.size());
}

double integrate(const ScalarField& f, const ScalarField& weight) {
    check_same_grid(f.grid(), weight.grid());
    ScalarField fw = pointwise_mul(f, weight);
    return integrate(fw);
}

double lq_norm(const ScalarField& f, double q) {
    if (!(q >= 1.0)) throw ConfigError("Lq norm needs q >= 1");
    const auto& w = f.grid().quad_weights();
    if (q == 2.0) {
        ScalarField sq = pointwise_mul(f, f);
        return std::sqrt(kernels::ops().dot(w.data(), sq.data(), sq.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        acc += w[i] * std::pow(std::fabs(f[i]), q);
    return std::pow(acc, 1.0 / q);
}

double max_norm(const ScalarField& f) {
    return kernels::ops().max_abs(f.data(), f.size());
}

} // namespace ops

} // namespace bifluid
