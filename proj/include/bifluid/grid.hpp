#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "bifluid/errors.hpp"

// Uniform structured grids in d = 1 or 2 with node-centered fields.
// Velocity carries homogeneous Dirichlet data on the boundary (or lives on a
// periodic grid); densities carry no boundary condition and use one-sided
// second-order stencils at boundary nodes.

namespace bifluid {

enum class Boundary { dirichlet, periodic };

class Grid {
public:
    // Dirichlet grids include both endpoints: h = (hi-lo)/(n-1).
    // Periodic grids drop the duplicate endpoint: h = (hi-lo)/n.
    Grid(int dim, std::array<std::size_t, 2> extents,
         std::array<double, 2> lo, std::array<double, 2> hi,
         Boundary boundary = Boundary::dirichlet);

    static Grid line(std::size_t n, double a, double b,
                     Boundary bc = Boundary::dirichlet) {
        return Grid(1, {n, 1}, {a, 0.0}, {b, 0.0}, bc);
    }
    static Grid rect(std::size_t nx, std::size_t ny, double ax, double bx,
                     double ay, double by, Boundary bc = Boundary::dirichlet) {
        return Grid(2, {nx, ny}, {ax, ay}, {bx, by}, bc);
    }

    int dim() const { return dim_; }
    Boundary boundary() const { return bc_; }
    std::size_t nx() const { return n_[0]; }
    std::size_t ny() const { return dim_ == 2 ? n_[1] : 1; }
    std::size_t num_nodes() const { return n_[0] * (dim_ == 2 ? n_[1] : 1); }
    double hx() const { return h_[0]; }
    double hy() const { return h_[1]; }
    double h(int axis) const { return h_[axis]; }
    double lo(int axis) const { return lo_[axis]; }
    double hi(int axis) const { return hi_[axis]; }

    std::size_t index(std::size_t i, std::size_t j = 0) const { return j * n_[0] + i; }
    double x(std::size_t i) const { return lo_[0] + static_cast<double>(i) * h_[0]; }
    double y(std::size_t j) const { return lo_[1] + static_cast<double>(j) * h_[1]; }

    bool is_boundary_node(std::size_t flat) const;

    // Flat indices of boundary nodes in ascending order (empty for periodic).
    const std::vector<std::size_t>& boundary_nodes() const { return boundary_nodes_; }

    // Trapezoid quadrature weight per node (h^d for periodic grids).
    const std::vector<double>& quad_weights() const { return quad_weights_; }

    bool same_as(const Grid& o) const;

private:
    int dim_;
    std::array<std::size_t, 2> n_;
    std::array<double, 2> lo_, hi_, h_;
    Boundary bc_;
    std::vector<std::size_t> boundary_nodes_;
    std::vector<double> quad_weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridPtr g, double fill = 0.0)
        : grid_(std::move(g)), v_(grid_->num_nodes(), fill) {}

    const Grid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

private:
    GridPtr grid_;
    std::vector<double> v_;
};

// d scalar components in structure-of-arrays layout. `dirichlet` marks a
// velocity-like field whose boundary values are pinned to zero.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(GridPtr g, bool dirichlet = true)
        : dirichlet_(dirichlet && g->boundary() == Boundary::dirichlet) {
        for (int c = 0; c < g->dim(); ++c) comp_.emplace_back(g);
        grid_ = std::move(g);
    }

    const Grid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    int dim() const { return grid_->dim(); }
    bool dirichlet() const { return dirichlet_; }
    ScalarField& comp(int c) { return comp_[static_cast<std::size_t>(c)]; }
    const ScalarField& comp(int c) const { return comp_[static_cast<std::size_t>(c)]; }

    // Force exact zeros on boundary nodes of every component.
    void clamp_boundary();

private:
    GridPtr grid_;
    std::vector<ScalarField> comp_;
    bool dirichlet_ = false;
};

// ---- field arithmetic (kernel-backed) ----
void check_same_grid(const Grid& a, const Grid& b);
ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double a, const ScalarField& f);
ScalarField pointwise_mul(const ScalarField& a, const ScalarField& b);
void add_scaled(ScalarField& dst, double a, const ScalarField& src); // dst += a*src
VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator*(double a, const VectorField& f);
void add_scaled(VectorField& dst, double a, const VectorField& src);

namespace ops {

// Second-order partial derivatives; centered inside, one-sided at Dirichlet
// boundaries, wrap-around on periodic grids.
ScalarField dx(const ScalarField& f);
ScalarField dy(const ScalarField& f);
ScalarField d1(const ScalarField& f, int axis);
ScalarField dxx(const ScalarField& f);
ScalarField dyy(const ScalarField& f);
ScalarField d2(const ScalarField& f, int axis);
ScalarField dxy(const ScalarField& f); // composition dx(dy f)

VectorField grad(const ScalarField& f);
ScalarField divergence(const VectorField& v);
ScalarField laplacian(const ScalarField& f);
VectorField laplacian(const VectorField& v);
VectorField grad_div(const VectorField& v);

// Composite trapezoid quadrature with fixed summation order.
double integrate(const ScalarField& f);
double integrate(const ScalarField& f, const ScalarField& weight);

// Discrete L^q norm by quadrature of |f|^q.
double lq_norm(const ScalarField& f, double q);
double max_norm(const ScalarField& f);

} // namespace ops

} // namespace bifluid
