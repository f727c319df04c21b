#include "wgf/constraints.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace wgf {

std::string to_string(BlockKind k) {
    switch (k) {
        case BlockKind::PdeResidual: return "pde";
        case BlockKind::BoundaryFlux: return "boundary";
        case BlockKind::MassConservation: return "mass";
        case BlockKind::InitialData: return "initial";
        case BlockKind::TargetData: return "target";
    }
    return "unknown";
}

std::string to_string(RelaxationPolicy::Mode m) {
    return m == RelaxationPolicy::Mode::Explicit ? "explicit" : "scaled_to_grid";
}

ConstraintSet::ConstraintSet(std::size_t cols, std::vector<ConstraintBlock> blocks)
    : cols_(cols), blocks_(std::move(blocks)) {
    offsets_.reserve(blocks_.size());
    for (const auto& b : blocks_) {
        if (b.rhs.size() != b.rows) throw InvalidInput("constraint rhs size differs from row count");
        if (!(b.radius >= 0.0)) throw InvalidInput("constraint radius must be nonnegative");
        if (!(b.scale > 0.0)) throw InvalidInput("constraint scale must be positive");
        offsets_.push_back(total_rows_);
        total_rows_ += b.rows;
    }
}

void ConstraintSet::apply(std::span<const double> u, std::span<double> out) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].apply(u, out.subspan(offsets_[i], blocks_[i].rows));
}

void ConstraintSet::adjoint(std::span<const double> phi, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        blocks_[i].adjoint_add(phi.subspan(offsets_[i], blocks_[i].rows), out);
}

std::vector<double> ConstraintSet::residual_norms(std::span<const double> u) const {
    std::vector<double> norms;
    std::vector<double> buf;
    for (const auto& b : blocks_) {
        buf.assign(b.rows, 0.0);
        b.apply(u, buf);
        double s = 0.0;
        for (std::size_t r = 0; r < b.rows; ++r) {
            const double d = buf[r] - b.rhs[r];
            s += d * d;
        }
        norms.push_back(std::sqrt(s) / b.scale);
    }
    return norms;
}

std::vector<double> ConstraintSet::radii() const {
    std::vector<double> r;
    for (const auto& b : blocks_) r.push_back(b.radius);
    return r;
}

RelaxationPolicy RelaxationPolicy::scaled(double c1, double c2) {
    RelaxationPolicy p;
    p.c1 = c1;
    p.c2 = c2;
    return p;
}

RelaxationPolicy RelaxationPolicy::explicit_radii(std::vector<double> v) {
    RelaxationPolicy p;
    p.mode = Mode::Explicit;
    p.values = std::move(v);
    return p;
}

std::vector<double> RelaxationPolicy::radii(const GridSpec& grid, std::size_t num_blocks) const {
    std::vector<double> r(num_blocks);
    if (mode == Mode::Explicit) {
        if (values.size() != 1 && values.size() != num_blocks)
            throw InvalidInput("explicit relaxation needs 1 or " + std::to_string(num_blocks) + " radii");
        for (std::size_t i = 0; i < num_blocks; ++i) r[i] = values.size() == 1 ? values[0] : values[i];
    } else {
        const double h = grid.max_dx();
        r[0] = c1 * (h * h + grid.dt() * grid.dt());
        for (std::size_t i = 1; i < num_blocks; ++i) r[i] = c2 * h * h;
    }
    for (double v : r)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("relaxation radii must be finite and nonnegative");
    return r;
}

namespace {

void check_density(std::span<const double> rho, const GridSpec& grid, const char* name) {
    if (rho.size() != grid.num_nodes())
        throw InvalidInput(std::string(name) + " has " + std::to_string(rho.size()) + " entries, grid has " +
                           std::to_string(grid.num_nodes()) + " nodes");
    for (std::size_t j = 0; j < rho.size(); ++j) {
        if (!std::isfinite(rho[j]) || rho[j] < 0.0) {
            std::ostringstream msg;
            msg << name << " must be finite and nonnegative (node " << j << " = " << rho[j] << ")";
            throw InvalidInput(msg.str());
        }
    }
}

std::vector<ConstraintBlock> common_blocks(const GridSpec& grid, std::span<const double> rho0,
                                           const std::vector<double>& radii) {
    const std::size_t n = grid.num_nodes();
    const std::size_t field = grid.field_size();
    const std::size_t slices = grid.num_slices();
    const double dt = grid.dt();
    const double vol = grid.cell_volume();
    std::vector<ConstraintBlock> blocks;

    {
        ConstraintBlock b;
        b.kind = BlockKind::PdeResidual;
        b.rows = pde_rows(grid);
        // Rows are dt·(D_t ρ + div m).
        const double w = dt;
        b.scale = std::sqrt(dt / vol);
        b.apply = [grid, w, field](std::span<const double> u, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            add_dt_forward(grid, u.first(field), out, w);
            add_divergence(grid, u.subspan(field), out, w);
        };
        b.adjoint_add = [grid, w, field](std::span<const double> phi, std::span<double> u) {
            add_dt_forward_adjoint(grid, phi, u.first(field), w);
            add_divergence_adjoint(grid, phi, u.subspan(field), w);
        };
        b.rhs.assign(b.rows, 0.0);
        b.radius = radii[0];
        blocks.push_back(std::move(b));
    }
    {
        ConstraintBlock b;
        b.kind = BlockKind::BoundaryFlux;
        b.rows = boundary_rows(grid);
        // Unit rows on a uniform grid; the common factor 1/√(dt·h^{d−1}) is moved into the scale.
        b.scale = 1.0 / std::sqrt(dt * std::pow(vol, (grid.dim - 1.0) / grid.dim));
        std::array<double, 2> face{1.0, 1.0};
        for (int a = 0; a < grid.dim; ++a) {
            double area = dt;
            for (int l = 0; l < grid.dim; ++l)
                if (l != a) area *= grid.dx(l);
            face[a] = std::sqrt(area) * b.scale;
        }
        b.apply = [grid, face, field](std::span<const double> u, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            add_boundary_trace(grid, u.subspan(field), out, face);
        };
        b.adjoint_add = [grid, face, field](std::span<const double> phi, std::span<double> u) {
            add_boundary_trace_adjoint(grid, phi, u.subspan(field), face);
        };
        b.rhs.assign(b.rows, 0.0);
        b.radius = radii[1];
        blocks.push_back(std::move(b));
    }
    {
        ConstraintBlock b;
        b.kind = BlockKind::MassConservation;
        b.rows = slices;
        const double w = vol;
        b.scale = 1.0 / std::sqrt(dt);
        b.apply = [w, n, slices](std::span<const double> u, std::span<double> out) {
            for (std::size_t k = 0; k < slices; ++k) {
                const double* r = u.data() + k * n;
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) s += r[j];
                out[k] = w * s;
            }
        };
        b.adjoint_add = [w, n, slices](std::span<const double> phi, std::span<double> u) {
            for (std::size_t k = 0; k < slices; ++k) {
                double* r = u.data() + k * n;
                const double v = w * phi[k];
                for (std::size_t j = 0; j < n; ++j) r[j] += v;
            }
        };
        b.rhs.assign(slices, slice_mass(rho0, grid));
        b.radius = radii[2];
        blocks.push_back(std::move(b));
    }
    {
        ConstraintBlock b;
        b.kind = BlockKind::InitialData;
        b.rows = n;
        const double w = 1.0;
        b.scale = 1.0 / std::sqrt(vol);
        b.apply = [w, n](std::span<const double> u, std::span<double> out) {
            for (std::size_t j = 0; j < n; ++j) out[j] = w * u[j];
        };
        b.adjoint_add = [w, n](std::span<const double> phi, std::span<double> u) {
            for (std::size_t j = 0; j < n; ++j) u[j] += w * phi[j];
        };
        b.rhs.resize(n);
        for (std::size_t j = 0; j < n; ++j) b.rhs[j] = w * rho0[j];
        b.radius = radii[3];
        blocks.push_back(std::move(b));
    }
    return blocks;
}

}  // namespace

ConstraintSet assemble_flow(const GridSpec& grid, std::span<const double> rho0, const RelaxationPolicy& policy) {
    grid.validate();
    check_density(rho0, grid, "rho0");
    auto radii = policy.radii(grid, 4);
    return ConstraintSet(grid.primal_size(), common_blocks(grid, rho0, radii));
}

double mass_gap_tolerance(const GridSpec& grid, double delta3, double delta5) {
    return delta3 / std::sqrt(grid.dt()) + delta5 * std::sqrt(grid.cell_volume() * static_cast<double>(grid.num_nodes()));
}

ConstraintSet assemble_geodesic(const GridSpec& grid, std::span<const double> rho0, std::span<const double> rho1,
                                const RelaxationPolicy& policy) {
    grid.validate();
    check_density(rho0, grid, "rho0");
    check_density(rho1, grid, "rho1");
    auto radii = policy.radii(grid, 5);
    auto blocks = common_blocks(grid, rho0, radii);

    const std::size_t n = grid.num_nodes();
    const std::size_t last = static_cast<std::size_t>(grid.n_time) * n;
    ConstraintBlock b;
    b.kind = BlockKind::TargetData;
    b.rows = n;
    const double w = 1.0;
    b.scale = 1.0 / std::sqrt(grid.cell_volume());
    b.apply = [w, n, last](std::span<const double> u, std::span<double> out) {
        for (std::size_t j = 0; j < n; ++j) out[j] = w * u[last + j];
    };
    b.adjoint_add = [w, n, last](std::span<const double> phi, std::span<double> u) {
        for (std::size_t j = 0; j < n; ++j) u[last + j] += w * phi[j];
    };
    b.rhs.resize(n);
    for (std::size_t j = 0; j < n; ++j) b.rhs[j] = w * rho1[j];
    b.radius = radii[4];
    blocks.push_back(std::move(b));

    ConstraintSet set(grid.primal_size(), std::move(blocks));
    const double gap = std::abs(slice_mass(rho1, grid) - slice_mass(rho0, grid));
    const double tol = mass_gap_tolerance(grid, radii[2], radii[4]);
    if (gap > tol) {
        std::ostringstream msg;
        msg << "mass of target differs from source by " << gap << " (relaxation tolerates " << tol
            << "); the relaxed problem may be infeasible";
        set.warnings.push_back(msg.str());
    }
    return set;
}

OpNormEstimate estimate_opnorm(const ConstraintSet& set, double tol, int max_iter, std::uint64_t seed) {
    if (max_iter < 1) throw InvalidInput("max_iter must be at least 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> v(set.cols()), av(set.total_rows()), w(set.cols());
    for (double& x : v) x = nd(rng);
    auto normalize = [](std::vector<double>& x) {
        double s = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
        if (s > 0.0)
            for (double& y : x) y /= s;
        return s;
    };
    normalize(v);

    OpNormEstimate est;
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        set.apply(v, av);
        const double rq = std::inner_product(av.begin(), av.end(), av.begin(), 0.0);
        set.adjoint(av, w);
        est.value = std::max(est.value, rq);
        est.iterations = it;
        if (it > 1 && std::abs(rq - prev) <= tol * std::abs(rq)) {
            est.converged = true;
            break;
        }
        prev = rq;
        v.swap(w);
        if (normalize(v) == 0.0) {
            est.converged = true;
            break;
        }
    }
    return est;
}

}  // namespace wgf
