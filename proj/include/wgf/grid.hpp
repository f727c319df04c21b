#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wgf {

/// Thrown when inputs violate a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Finite-difference stencil used for the discrete continuity equation.
enum class Scheme { ForwardEulerCentered, CrankNicolson };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Space-time discretization of a box domain times the unit inner time interval.
///
/// Unknowns live on nodes: spatial index j in {0..N_l} per axis and time index
/// k in {0..N_t}.  Storage is row-major with time outermost, then y, then x.
struct GridSpec {
    int dim = 1;
    std::array<double, 2> lower{0.0, 0.0};
    std::array<double, 2> upper{1.0, 1.0};
    std::array<int, 2> n_space{2, 2};  // cells per axis
    int n_time = 1;
    Scheme scheme = Scheme::CrankNicolson;

    /// Convenience constructor for the common case of equal cell counts.
    static GridSpec line(double a, double b, int nx, int nt, Scheme s = Scheme::CrankNicolson);
    static GridSpec square(double a, double b, int nx, int nt, Scheme s = Scheme::CrankNicolson);

    void validate() const;

    double dx(int axis) const { return (upper[axis] - lower[axis]) / n_space[axis]; }
    double dt() const { return 1.0 / n_time; }
    double max_dx() const;
    /// (Δx)^d, the spatial quadrature weight of one node.
    double cell_volume() const;

    std::size_t nodes_along(int axis) const { return static_cast<std::size_t>(n_space[axis]) + 1; }
    std::size_t num_nodes() const;
    std::size_t num_slices() const { return static_cast<std::size_t>(n_time) + 1; }
    std::size_t field_size() const { return num_nodes() * num_slices(); }
    /// Length of the flat primal vector u = [rho; m_x; (m_y)].
    std::size_t primal_size() const { return field_size() * static_cast<std::size_t>(1 + dim); }

    double node_coord(int axis, std::size_t j) const { return lower[axis] + static_cast<double>(j) * dx(axis); }
    /// Spatial position of flat node index `node`.
    std::array<double, 2> node_position(std::size_t node) const;

    bool operator==(const GridSpec&) const = default;
};

/// Nodal values of ρ over all time slices.
class DensityField {
public:
    explicit DensityField(const GridSpec& grid);
    DensityField(const GridSpec& grid, std::vector<double> values);

    std::size_t nodes() const { return nodes_; }
    std::size_t slices() const { return slices_; }
    double& operator()(std::size_t node, std::size_t k) { return values_[k * nodes_ + node]; }
    double operator()(std::size_t node, std::size_t k) const { return values_[k * nodes_ + node]; }
    std::span<double> slice(std::size_t k) { return {values_.data() + k * nodes_, nodes_}; }
    std::span<const double> slice(std::size_t k) const { return {values_.data() + k * nodes_, nodes_}; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

private:
    std::size_t nodes_;
    std::size_t slices_;
    std::vector<double> values_;
};

/// Nodal momentum vectors, one component block per axis, same layout as DensityField.
class MomentumField {
public:
    explicit MomentumField(const GridSpec& grid);

    int dim() const { return dim_; }
    std::size_t nodes() const { return nodes_; }
    std::size_t slices() const { return slices_; }
    std::span<double> component(int c) { return {values_.data() + c * nodes_ * slices_, nodes_ * slices_}; }
    std::span<const double> component(int c) const {
        return {values_.data() + c * nodes_ * slices_, nodes_ * slices_};
    }
    double& operator()(int c, std::size_t node, std::size_t k) {
        return values_[(c * slices_ + k) * nodes_ + node];
    }
    double operator()(int c, std::size_t node, std::size_t k) const {
        return values_[(c * slices_ + k) * nodes_ + node];
    }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

private:
    int dim_;
    std::size_t nodes_;
    std::size_t slices_;
    std::vector<double> values_;
};

/// Flat primal vector u = [ρ; m_1; ...; m_d] with typed views.
class PrimalState {
public:
    PrimalState() = default;
    explicit PrimalState(const GridSpec& grid);

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }
    std::span<double> rho() { return {data_.data(), field_}; }
    std::span<const double> rho() const { return {data_.data(), field_}; }
    std::span<double> momentum(int c) { return {data_.data() + (1 + c) * field_, field_}; }
    std::span<const double> momentum(int c) const { return {data_.data() + (1 + c) * field_, field_}; }
    std::span<double> rho_slice(std::size_t k) { return {data_.data() + k * nodes_, nodes_}; }
    std::span<const double> rho_slice(std::size_t k) const { return {data_.data() + k * nodes_, nodes_}; }

    int dim() const { return dim_; }
    std::size_t nodes() const { return nodes_; }
    std::size_t slices() const { return slices_; }

    DensityField density(const GridSpec& grid) const;
    MomentumField momentum_field(const GridSpec& grid) const;

private:
    int dim_ = 1;
    std::size_t nodes_ = 0;
    std::size_t slices_ = 0;
    std::size_t field_ = 0;
    std::vector<double> data_;
};

using SpaceTimeFunction = std::function<double(std::span<const double> x, double t)>;

/// Per-axis offset of the sampling lattice: x_j = a + offset + jΔx, t_k = offset_t + kΔt.
struct SampleAnchor {
    std::array<double, 2> space{0.0, 0.0};
    double time = 0.0;
};

/// Pointwise piecewise-constant approximation of f on the node lattice.
DensityField sample_pointwise(const SpaceTimeFunction& f, const GridSpec& grid, SampleAnchor anchor = {});

/// Samples a time-independent function on the spatial nodes only.
std::vector<double> sample_nodes(const std::function<double(std::span<const double>)>& f, const GridSpec& grid);

// ---------------------------------------------------------------------------
// Stencil kernels.  All act on flat spans in the layout above and *accumulate*
// `scale * op(input)` into `out`.  Outputs of the time-derivative and
// divergence operators have N_t slices (k = 0..N_t-1); rows at spatial
// boundary nodes are zero, boundary behaviour lives in the flux block.

std::size_t pde_rows(const GridSpec& grid);
std::size_t boundary_rows(const GridSpec& grid);

void add_dt_forward(const GridSpec& grid, std::span<const double> rho, std::span<double> out, double scale);
void add_dt_forward_adjoint(const GridSpec& grid, std::span<const double> phi, std::span<double> rho, double scale);

/// Centered divergence of m (all components stacked) on interior nodes.
void add_divergence(const GridSpec& grid, std::span<const double> m, std::span<double> out, double scale);
void add_divergence_adjoint(const GridSpec& grid, std::span<const double> phi, std::span<double> m, double scale);

/// m·ν on each face node and slice.  Faces ordered axis-major, lower side first;
/// corner nodes appear once per face they belong to.
void add_boundary_trace(const GridSpec& grid, std::span<const double> m, std::span<double> out,
                        std::span<const double> face_scale);
void add_boundary_trace_adjoint(const GridSpec& grid, std::span<const double> phi, std::span<double> m,
                                std::span<const double> face_scale);
/// Number of nodes on the face normal to `axis` (either side).
std::size_t face_nodes(const GridSpec& grid, int axis);

// Typed convenience wrappers.
std::vector<double> dt_forward(const DensityField& rho, const GridSpec& grid);
std::vector<double> dx_divergence(const MomentumField& m, const GridSpec& grid);
std::vector<double> boundary_trace(const MomentumField& m, const GridSpec& grid);

/// Total mass Σ_j ρ_j (Δx)^d of one spatial slice.
double slice_mass(std::span<const double> slice, const GridSpec& grid);

}  // namespace wgf
