#include "wgf/grid.hpp"

#include <cmath>
#include <sstream>

namespace wgf {

std::string to_string(Scheme s) {
    return s == Scheme::CrankNicolson ? "crank_nicolson" : "forward_euler";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "crank_nicolson" || s == "cn") return Scheme::CrankNicolson;
    if (s == "forward_euler" || s == "fe" || s == "forward_euler_centered") return Scheme::ForwardEulerCentered;
    throw InvalidInput("unknown scheme '" + s + "'");
}

GridSpec GridSpec::line(double a, double b, int nx, int nt, Scheme s) {
    GridSpec g;
    g.dim = 1;
    g.lower = {a, 0.0};
    g.upper = {b, 1.0};
    g.n_space = {nx, 1};
    g.n_time = nt;
    g.scheme = s;
    return g;
}

GridSpec GridSpec::square(double a, double b, int nx, int nt, Scheme s) {
    GridSpec g;
    g.dim = 2;
    g.lower = {a, a};
    g.upper = {b, b};
    g.n_space = {nx, nx};
    g.n_time = nt;
    g.scheme = s;
    return g;
}

void GridSpec::validate() const {
    if (dim != 1 && dim != 2) throw InvalidInput("grid dimension must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
        if (n_space[a] < 2) throw InvalidInput("n_space must be at least 2 on every axis");
        if (!(upper[a] > lower[a]) || !std::isfinite(upper[a]) || !std::isfinite(lower[a]))
            throw InvalidInput("grid bounds must satisfy lower < upper");
    }
    if (n_time < 1) throw InvalidInput("n_time must be at least 1");
}

double GridSpec::max_dx() const {
    double h = dx(0);
    if (dim == 2) h = std::max(h, dx(1));
    return h;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= dx(a);
    return v;
}

std::size_t GridSpec::num_nodes() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= nodes_along(a);
    return n;
}

std::array<double, 2> GridSpec::node_position(std::size_t node) const {
    const std::size_t nx = nodes_along(0);
    std::array<double, 2> p{node_coord(0, node % nx), 0.0};
    if (dim == 2) p[1] = node_coord(1, node / nx);
    return p;
}

DensityField::DensityField(const GridSpec& grid)
    : nodes_(grid.num_nodes()), slices_(grid.num_slices()), values_(grid.field_size(), 0.0) {}

DensityField::DensityField(const GridSpec& grid, std::vector<double> values)
    : nodes_(grid.num_nodes()), slices_(grid.num_slices()), values_(std::move(values)) {
    if (values_.size() != nodes_ * slices_) throw InvalidInput("density field has wrong size for grid");
}

MomentumField::MomentumField(const GridSpec& grid)
    : dim_(grid.dim),
      nodes_(grid.num_nodes()),
      slices_(grid.num_slices()),
      values_(grid.field_size() * static_cast<std::size_t>(grid.dim), 0.0) {}

PrimalState::PrimalState(const GridSpec& grid)
    : dim_(grid.dim),
      nodes_(grid.num_nodes()),
      slices_(grid.num_slices()),
      field_(grid.field_size()),
      data_(grid.primal_size(), 0.0) {}

DensityField PrimalState::density(const GridSpec& grid) const {
    auto r = rho();
    return DensityField(grid, std::vector<double>(r.begin(), r.end()));
}

MomentumField PrimalState::momentum_field(const GridSpec& grid) const {
    MomentumField m(grid);
    auto dst = m.values();
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(field_), data_.end(), dst.begin());
    return m;
}

DensityField sample_pointwise(const SpaceTimeFunction& f, const GridSpec& grid, SampleAnchor anchor) {
    grid.validate();
    DensityField out(grid);
    std::array<double, 2> x{};
    for (std::size_t k = 0; k < grid.num_slices(); ++k) {
        const double t = anchor.time + static_cast<double>(k) * grid.dt();
        for (std::size_t node = 0; node < grid.num_nodes(); ++node) {
            x = grid.node_position(node);
            for (int a = 0; a < grid.dim; ++a) x[a] += anchor.space[a];
            const double v = f(std::span<const double>(x.data(), static_cast<std::size_t>(grid.dim)), t);
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "non-finite sample at node " << node << " (x=" << x[0];
                if (grid.dim == 2) msg << ", y=" << x[1];
                msg << "), slice " << k;
                throw InvalidInput(msg.str());
            }
            out(node, k) = v;
        }
    }
    return out;
}

std::vector<double> sample_nodes(const std::function<double(std::span<const double>)>& f, const GridSpec& grid) {
    std::vector<double> out(grid.num_nodes());
    for (std::size_t node = 0; node < out.size(); ++node) {
        auto x = grid.node_position(node);
        out[node] = f(std::span<const double>(x.data(), static_cast<std::size_t>(grid.dim)));
    }
    return out;
}

std::size_t pde_rows(const GridSpec& grid) { return static_cast<std::size_t>(grid.n_time) * grid.num_nodes(); }

std::size_t face_nodes(const GridSpec& grid, int axis) {
    if (grid.dim == 1) return 1;
    return grid.nodes_along(1 - axis);
}

std::size_t boundary_rows(const GridSpec& grid) {
    std::size_t per_slice = 0;
    for (int a = 0; a < grid.dim; ++a) per_slice += 2 * face_nodes(grid, a);
    return per_slice * grid.num_slices();
}

namespace {

bool on_boundary(const GridSpec& g, std::size_t ix, std::size_t iy) {
    if (ix == 0 || ix + 1 == g.nodes_along(0)) return true;
    return g.dim == 2 && (iy == 0 || iy + 1 == g.nodes_along(1));
}

// out[i] += f * (in[i+s] - in[i-s]) along `axis` on interior nodes; boundary rows stay zero.
void centered_slice(const GridSpec& g, int axis, const double* in, double* out, double f) {
    const std::size_t nx = g.nodes_along(0);
    const std::size_t ny = g.dim == 2 ? g.nodes_along(1) : 1;
    const std::size_t s = axis == 0 ? 1 : nx;
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix) {
            if (on_boundary(g, ix, iy)) continue;
            const std::size_t i = iy * nx + ix;
            out[i] += f * (in[i + s] - in[i - s]);
        }
}

// Transpose of centered_slice.
void centered_slice_adjoint(const GridSpec& g, int axis, const double* in, double* out, double f) {
    const std::size_t nx = g.nodes_along(0);
    const std::size_t ny = g.dim == 2 ? g.nodes_along(1) : 1;
    const std::size_t s = axis == 0 ? 1 : nx;
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix) {
            if (on_boundary(g, ix, iy)) continue;
            const std::size_t i = iy * nx + ix;
            out[i + s] += f * in[i];
            out[i - s] -= f * in[i];
        }
}

std::vector<char> interior_mask(const GridSpec& g) {
    const std::size_t nx = g.nodes_along(0);
    std::vector<char> mask(g.num_nodes());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = !on_boundary(g, i % nx, i / nx);
    return mask;
}

void check_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want) throw InvalidInput(std::string("size mismatch in ") + what);
}

}  // namespace

void add_dt_forward(const GridSpec& grid, std::span<const double> rho, std::span<double> out, double scale) {
    const std::size_t n = grid.num_nodes();
    check_size(rho.size(), grid.field_size(), "dt_forward input");
    check_size(out.size(), pde_rows(grid), "dt_forward output");
    const double f = scale / grid.dt();
    const auto mask = interior_mask(grid);
    for (std::size_t k = 0; k < static_cast<std::size_t>(grid.n_time); ++k) {
        const double* r0 = rho.data() + k * n;
        const double* r1 = r0 + n;
        double* o = out.data() + k * n;
        for (std::size_t j = 0; j < n; ++j)
            if (mask[j]) o[j] += f * (r1[j] - r0[j]);
    }
}

void add_dt_forward_adjoint(const GridSpec& grid, std::span<const double> phi, std::span<double> rho, double scale) {
    const std::size_t n = grid.num_nodes();
    check_size(phi.size(), pde_rows(grid), "dt_forward adjoint input");
    check_size(rho.size(), grid.field_size(), "dt_forward adjoint output");
    const double f = scale / grid.dt();
    const auto mask = interior_mask(grid);
    for (std::size_t k = 0; k < static_cast<std::size_t>(grid.n_time); ++k) {
        const double* p = phi.data() + k * n;
        double* r0 = rho.data() + k * n;
        double* r1 = r0 + n;
        for (std::size_t j = 0; j < n; ++j) {
            if (!mask[j]) continue;
            r0[j] -= f * p[j];
            r1[j] += f * p[j];
        }
    }
}

void add_divergence(const GridSpec& grid, std::span<const double> m, std::span<double> out, double scale) {
    const std::size_t n = grid.num_nodes();
    const std::size_t field = grid.field_size();
    check_size(m.size(), field * static_cast<std::size_t>(grid.dim), "divergence input");
    check_size(out.size(), pde_rows(grid), "divergence output");
    const bool cn = grid.scheme == Scheme::CrankNicolson;
    for (int c = 0; c < grid.dim; ++c) {
        const double* mc = m.data() + static_cast<std::size_t>(c) * field;
        const double f = scale / ((cn ? 4.0 : 2.0) * grid.dx(c));
        for (std::size_t k = 0; k < static_cast<std::size_t>(grid.n_time); ++k) {
            double* o = out.data() + k * n;
            centered_slice(grid, c, mc + k * n, o, f);
            if (cn) centered_slice(grid, c, mc + (k + 1) * n, o, f);
        }
    }
}

void add_divergence_adjoint(const GridSpec& grid, std::span<const double> phi, std::span<double> m, double scale) {
    const std::size_t n = grid.num_nodes();
    const std::size_t field = grid.field_size();
    check_size(phi.size(), pde_rows(grid), "divergence adjoint input");
    check_size(m.size(), field * static_cast<std::size_t>(grid.dim), "divergence adjoint output");
    const bool cn = grid.scheme == Scheme::CrankNicolson;
    for (int c = 0; c < grid.dim; ++c) {
        double* mc = m.data() + static_cast<std::size_t>(c) * field;
        const double f = scale / ((cn ? 4.0 : 2.0) * grid.dx(c));
        for (std::size_t k = 0; k < static_cast<std::size_t>(grid.n_time); ++k) {
            const double* p = phi.data() + k * n;
            centered_slice_adjoint(grid, c, p, mc + k * n, f);
            if (cn) centered_slice_adjoint(grid, c, p, mc + (k + 1) * n, f);
        }
    }
}

namespace {

// Visits every (row, node, axis, sign) of the boundary trace in row order.
template <typename Fn>
void for_each_face_row(const GridSpec& grid, Fn&& fn) {
    const std::size_t nx = grid.nodes_along(0);
    const std::size_t ny = grid.dim == 2 ? grid.nodes_along(1) : 1;
    std::size_t row = 0;
    for (std::size_t k = 0; k < grid.num_slices(); ++k) {
        for (int axis = 0; axis < grid.dim; ++axis) {
            for (int side = 0; side < 2; ++side) {
                const double sign = side == 0 ? -1.0 : 1.0;
                if (axis == 0) {
                    const std::size_t ix = side == 0 ? 0 : nx - 1;
                    for (std::size_t iy = 0; iy < ny; ++iy) fn(row++, k, iy * nx + ix, axis, sign);
                } else {
                    const std::size_t iy = side == 0 ? 0 : ny - 1;
                    for (std::size_t ix = 0; ix < nx; ++ix) fn(row++, k, iy * nx + ix, axis, sign);
                }
            }
        }
    }
}

}  // namespace

void add_boundary_trace(const GridSpec& grid, std::span<const double> m, std::span<double> out,
                        std::span<const double> face_scale) {
    const std::size_t n = grid.num_nodes();
    const std::size_t field = grid.field_size();
    check_size(m.size(), field * static_cast<std::size_t>(grid.dim), "boundary trace input");
    check_size(out.size(), boundary_rows(grid), "boundary trace output");
    for_each_face_row(grid, [&](std::size_t row, std::size_t k, std::size_t node, int axis, double sign) {
        out[row] += face_scale[axis] * sign * m[axis * field + k * n + node];
    });
}

void add_boundary_trace_adjoint(const GridSpec& grid, std::span<const double> phi, std::span<double> m,
                                std::span<const double> face_scale) {
    const std::size_t n = grid.num_nodes();
    const std::size_t field = grid.field_size();
    check_size(phi.size(), boundary_rows(grid), "boundary trace adjoint input");
    check_size(m.size(), field * static_cast<std::size_t>(grid.dim), "boundary trace adjoint output");
    for_each_face_row(grid, [&](std::size_t row, std::size_t k, std::size_t node, int axis, double sign) {
        m[axis * field + k * n + node] += face_scale[axis] * sign * phi[row];
    });
}

std::vector<double> dt_forward(const DensityField& rho, const GridSpec& grid) {
    std::vector<double> out(pde_rows(grid), 0.0);
    add_dt_forward(grid, rho.values(), out, 1.0);
    return out;
}

std::vector<double> dx_divergence(const MomentumField& m, const GridSpec& grid) {
    std::vector<double> out(pde_rows(grid), 0.0);
    add_divergence(grid, m.values(), out, 1.0);
    return out;
}

std::vector<double> boundary_trace(const MomentumField& m, const GridSpec& grid) {
    std::vector<double> out(boundary_rows(grid), 0.0);
    const std::array<double, 2> ones{1.0, 1.0};
    add_boundary_trace(grid, m.values(), out, ones);
    return out;
}

double slice_mass(std::span<const double> slice, const GridSpec& grid) {
    double s = 0.0;
    for (double v : slice) s += v;
    return s * grid.cell_volume();
}

}  // namespace wgf
