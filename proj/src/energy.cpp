#include "wgf/energy.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

namespace wgf {

namespace {

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double power_term(double r, double a) { return a == 0.0 ? std::log(r) : std::pow(r, a) / a; }

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

namespace kernels {

KernelFunction power_law(double a, double b) {
    if (!(a > b) || b < 0.0) throw InvalidInput("power_law kernel needs a > b >= 0");
    return [a, b](std::span<const double> x) {
        const double r = norm(x);
        return power_term(r, a) - power_term(r, b);
    };
}

KernelFunction quadratic_attraction(double c) {
    return [c](std::span<const double> x) {
        const double r = norm(x);
        return 0.5 * c * r * r;
    };
}

KernelFunction log_repulsion(double c) {
    return [c](std::span<const double> x) { return -c * std::log(norm(x)); };
}

KernelFunction gaussian_kernel(double amplitude, double width) {
    if (!(width > 0.0)) throw InvalidInput("gaussian kernel width must be positive");
    return [amplitude, width](std::span<const double> x) {
        const double r = norm(x) / width;
        return amplitude * std::exp(-r * r);
    };
}

KernelFunction newtonian_2d(double chi) {
    return [chi](std::span<const double> x) { return chi / (2.0 * std::numbers::pi) * std::log(norm(x)); };
}

KernelFunction quadratic_drift(double c) { return quadratic_attraction(c); }

KernelFunction log_drift(double c) { return log_repulsion(c); }

KernelFunction tabulated_radial(std::vector<double> r, std::vector<double> w) {
    if (r.size() != w.size() || r.size() < 2) throw InvalidInput("tabulated kernel needs at least two (r, W) pairs");
    for (std::size_t i = 1; i < r.size(); ++i)
        if (!(r[i] > r[i - 1])) throw InvalidInput("tabulated kernel radii must be increasing");
    return [r = std::move(r), w = std::move(w)](std::span<const double> x) {
        const double q = norm(x);
        if (q <= r.front()) return w.front();
        if (q >= r.back()) return w.back();
        const auto it = std::upper_bound(r.begin(), r.end(), q);
        const std::size_t i = static_cast<std::size_t>(it - r.begin());
        const double t = (q - r[i - 1]) / (r[i] - r[i - 1]);
        return (1.0 - t) * w[i - 1] + t * w[i];
    };
}

}  // namespace kernels

namespace {

// 4-point Gauss–Legendre on geometrically graded pieces of [0, h]; resolves
// integrable singularities at 0 while staying exact on low-degree polynomials.
struct GradedRule {
    std::vector<double> x, w;
};

GradedRule graded_rule(double h) {
    static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                     0.8611363115940526};
    static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                     0.3478548451374538};
    GradedRule rule;
    double hi = h;
    for (int level = 0; level < 60; ++level) {
        const double lo = hi * 0.5;
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int q = 0; q < 4; ++q) {
            rule.x.push_back(mid + half * gx[q]);
            rule.w.push_back(half * gw[q]);
        }
        hi = lo;
    }
    return rule;
}

}  // namespace

double regularize_kernel_origin(const KernelFunction& w, std::span<const double> h) {
    const std::size_t dim = h.size();
    if (dim < 1 || dim > 2) throw InvalidInput("regularize_kernel_origin supports 1 or 2 dimensions");
    for (double v : h)
        if (!(v > 0.0)) throw InvalidInput("regularization cell must have positive size");
    double total = 0.0;
    std::array<double, 2> p{};
    if (dim == 1) {
        const auto rule = graded_rule(h[0]);
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            for (double s : {-1.0, 1.0}) {
                p[0] = s * rule.x[i];
                total += rule.w[i] * w(std::span<const double>(p.data(), 1));
            }
        }
        total /= 2.0 * h[0];
    } else {
        const auto rx = graded_rule(h[0]);
        const auto ry = graded_rule(h[1]);
        for (std::size_t i = 0; i < rx.x.size(); ++i) {
            for (std::size_t j = 0; j < ry.x.size(); ++j) {
                const double wt = rx.w[i] * ry.w[j];
                for (double sx : {-1.0, 1.0}) {
                    for (double sy : {-1.0, 1.0}) {
                        p = {sx * rx.x[i], sy * ry.x[j]};
                        total += wt * w(std::span<const double>(p.data(), 2));
                    }
                }
            }
        }
        total /= 4.0 * h[0] * h[1];
    }
    if (!std::isfinite(total)) throw InvalidInput("kernel average over the origin cell is not finite");
    return total;
}

double regularize_kernel_origin(const KernelFunction& w, double h) {
    const double hh[1] = {h};
    return regularize_kernel_origin(w, std::span<const double>(hh, 1));
}

struct FftConvolution::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    ~Plans() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

FftConvolution::FftConvolution(const GridSpec& grid, std::vector<double> stencil)
    : grid_(grid), stencil_(std::move(stencil)), nodes_(grid.num_nodes()), plans_(std::make_unique<Plans>()) {
    grid.validate();
    const std::size_t nx = grid.nodes_along(0);
    const std::size_t ny = grid.dim == 2 ? grid.nodes_along(1) : 1;
    const std::size_t sx = 2 * nx - 1, sy = grid.dim == 2 ? 2 * ny - 1 : 1;
    if (stencil_.size() != sx * sy)
        throw InvalidInput("kernel stencil has " + std::to_string(stencil_.size()) + " entries, expected " +
                           std::to_string(sx * sy));
    pad_ = {2 * nx, grid.dim == 2 ? 2 * ny : 1};
    const std::size_t px = pad_[0], py = pad_[1];
    const std::size_t cx = px / 2 + 1;

    std::vector<double> real(px * py, 0.0);
    std::vector<double> spec(2 * cx * py, 0.0);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        if (grid.dim == 1) {
            plans_->forward = fftw_plan_dft_r2c_1d(static_cast<int>(px), real.data(), cplx, flags);
            plans_->backward = fftw_plan_dft_c2r_1d(static_cast<int>(px), cplx, real.data(), flags);
        } else {
            plans_->forward =
                fftw_plan_dft_r2c_2d(static_cast<int>(py), static_cast<int>(px), real.data(), cplx, flags);
            plans_->backward =
                fftw_plan_dft_c2r_2d(static_cast<int>(py), static_cast<int>(px), cplx, real.data(), flags);
        }
    }
    if (!plans_->forward || !plans_->backward) throw std::runtime_error("FFTW plan creation failed");

    // Offset o lands at index o mod P on each axis.
    const long ox = static_cast<long>(nx) - 1, oy = static_cast<long>(ny) - 1;
    for (long dy = -oy; dy <= oy; ++dy) {
        const std::size_t iy = static_cast<std::size_t>((dy + static_cast<long>(py)) % static_cast<long>(py));
        for (long dx = -ox; dx <= ox; ++dx) {
            const std::size_t ix = static_cast<std::size_t>((dx + static_cast<long>(px)) % static_cast<long>(px));
            real[iy * px + ix] = stencil_[static_cast<std::size_t>(dy + oy) * sx + static_cast<std::size_t>(dx + ox)];
        }
    }
    fftw_execute_dft_r2c(plans_->forward, real.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    // Fold the cell volume and the unnormalized inverse transform into the kernel spectrum.
    const double scale = grid.cell_volume() / static_cast<double>(px * py);
    for (double& v : spec) v *= scale;
    kernel_hat_ = std::move(spec);
}

FftConvolution::~FftConvolution() = default;

void FftConvolution::apply(std::span<const double> rho, std::span<double> out) const {
    if (rho.size() != nodes_ || out.size() != nodes_) throw InvalidInput("convolution input has wrong size");
    const std::size_t nx = grid_.nodes_along(0);
    const std::size_t ny = grid_.dim == 2 ? grid_.nodes_along(1) : 1;
    const std::size_t px = pad_[0], py = pad_[1];
    const std::size_t cx = px / 2 + 1;
    std::vector<double> real(px * py, 0.0);
    std::vector<double> spec(2 * cx * py);
    for (std::size_t iy = 0; iy < ny; ++iy)
        std::copy_n(rho.data() + iy * nx, nx, real.data() + iy * px);
    auto* c = reinterpret_cast<fftw_complex*>(spec.data());
    fftw_execute_dft_r2c(plans_->forward, real.data(), c);
    for (std::size_t i = 0; i < cx * py; ++i) {
        const double ar = spec[2 * i], ai = spec[2 * i + 1];
        const double br = kernel_hat_[2 * i], bi = kernel_hat_[2 * i + 1];
        spec[2 * i] = ar * br - ai * bi;
        spec[2 * i + 1] = ar * bi + ai * br;
    }
    fftw_execute_dft_c2r(plans_->backward, c, real.data());
    for (std::size_t iy = 0; iy < ny; ++iy) std::copy_n(real.data() + iy * px, nx, out.data() + iy * nx);
}

DenseInteraction::DenseInteraction(const GridSpec& grid, std::vector<double> matrix)
    : n_(grid.num_nodes()), vol_(grid.cell_volume()), w_(std::move(matrix)) {
    if (w_.size() != n_ * n_) throw InvalidInput("dense interaction matrix has wrong size");
    for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t l = j + 1; l < n_; ++l)
            if (w_[j * n_ + l] != w_[l * n_ + j]) throw InvalidInput("interaction matrix must be symmetric");
}

void DenseInteraction::apply(std::span<const double> rho, std::span<double> out) const {
    if (rho.size() != n_ || out.size() != n_) throw InvalidInput("interaction input has wrong size");
    for (std::size_t j = 0; j < n_; ++j) {
        const double* row = w_.data() + j * n_;
        double s = 0.0;
        for (std::size_t l = 0; l < n_; ++l) s += row[l] * rho[l];
        out[j] = s * vol_;
    }
}

std::vector<double> kernel_stencil(const KernelFunction& w, const GridSpec& grid, bool regularize_origin) {
    grid.validate();
    const long ox = grid.n_space[0];
    const long oy = grid.dim == 2 ? grid.n_space[1] : 0;
    std::vector<double> st;
    st.reserve(static_cast<std::size_t>((2 * ox + 1) * (2 * oy + 1)));
    std::array<double, 2> p{};
    const auto d = static_cast<std::size_t>(grid.dim);
    for (long dy = -oy; dy <= oy; ++dy) {
        for (long dx = -ox; dx <= ox; ++dx) {
            p = {static_cast<double>(dx) * grid.dx(0), grid.dim == 2 ? static_cast<double>(dy) * grid.dx(1) : 0.0};
            double v = w(std::span<const double>(p.data(), d));
            if (dx == 0 && dy == 0 && !std::isfinite(v)) {
                if (!regularize_origin) throw InvalidInput("kernel is singular at the origin");
                std::array<double, 2> h{grid.dx(0), grid.dim == 2 ? grid.dx(1) : 0.0};
                v = regularize_kernel_origin(w, std::span<const double>(h.data(), d));
            }
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "kernel is not finite at offset (" << dx << ", " << dy << ")";
                throw InvalidInput(msg.str());
            }
            st.push_back(v);
        }
    }
    return st;
}

std::shared_ptr<FftConvolution> make_convolution(const KernelFunction& w, const GridSpec& grid,
                                                 bool regularize_origin) {
    return std::make_shared<FftConvolution>(grid, kernel_stencil(w, grid, regularize_origin));
}

std::shared_ptr<DenseInteraction> make_dense_interaction(
    const std::function<double(std::span<const double>, std::span<const double>)>& w, const GridSpec& grid) {
    const std::size_t n = grid.num_nodes();
    const auto d = static_cast<std::size_t>(grid.dim);
    std::vector<double> mat(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto xj = grid.node_position(j);
        for (std::size_t l = j; l < n; ++l) {
            const auto xl = grid.node_position(l);
            const double v = w(std::span<const double>(xj.data(), d), std::span<const double>(xl.data(), d));
            mat[j * n + l] = mat[l * n + j] = v;
        }
    }
    return std::make_shared<DenseInteraction>(grid, std::move(mat));
}

std::string to_string(InternalEnergy e) {
    switch (e) {
        case InternalEnergy::None: return "none";
        case InternalEnergy::Entropy: return "entropy";
        case InternalEnergy::Power: return "power";
    }
    return "none";
}

std::string to_string(EnergyVariant v) {
    switch (v) {
        case EnergyVariant::Classical: return "classical";
        case EnergyVariant::HigherOrder: return "higher_order";
        case EnergyVariant::TargetMeasure: return "target_measure";
    }
    return "classical";
}

InternalEnergy internal_energy_from_string(const std::string& s) {
    if (s == "none") return InternalEnergy::None;
    if (s == "entropy") return InternalEnergy::Entropy;
    if (s == "power") return InternalEnergy::Power;
    throw InvalidInput("unknown internal energy '" + s + "'");
}

EnergyVariant energy_variant_from_string(const std::string& s) {
    if (s == "classical") return EnergyVariant::Classical;
    if (s == "higher_order") return EnergyVariant::HigherOrder;
    if (s == "target_measure") return EnergyVariant::TargetMeasure;
    throw InvalidInput("unknown energy variant '" + s + "'");
}

void EnergySpec::validate(const GridSpec& grid) const {
    if (internal == InternalEnergy::Power && !(exponent > 1.0)) throw InvalidInput("power internal energy needs m > 1");
    if (!(artificial_diffusion >= 0.0)) throw InvalidInput("artificial diffusion must be nonnegative");
    if (!(diffusion >= 0.0)) throw InvalidInput("diffusion coefficient must be nonnegative");
    if (!potential.empty() && potential.size() != grid.num_nodes())
        throw InvalidInput("potential has wrong number of nodes");
    for (double v : potential)
        if (!std::isfinite(v)) throw InvalidInput("potential must be finite on every node");
    if (interaction && interaction->size() != grid.num_nodes())
        throw InvalidInput("interaction operator does not match the grid");
    if (variant == EnergyVariant::TargetMeasure && target.size() != grid.num_nodes())
        throw InvalidInput("target-measure energy needs a target density on the grid");
}

double internal_density(const EnergySpec& spec, double s) {
    double u = 0.0;
    switch (spec.internal) {
        case InternalEnergy::None: break;
        case InternalEnergy::Entropy: u = s > 0.0 ? s * std::log(s) : 0.0; break;
        case InternalEnergy::Power: u = std::pow(s, spec.exponent) / (spec.exponent - 1.0); break;
    }
    return spec.diffusion * u + spec.artificial_diffusion * s * s;
}

double internal_derivative(const EnergySpec& spec, double s) {
    double du = 0.0;
    switch (spec.internal) {
        case InternalEnergy::None: break;
        case InternalEnergy::Entropy: du = std::log(std::max(s, spec.entropy_floor)) + 1.0; break;
        case InternalEnergy::Power:
            du = spec.exponent / (spec.exponent - 1.0) * std::pow(s, spec.exponent - 1.0);
            break;
    }
    return spec.diffusion * du + 2.0 * spec.artificial_diffusion * s;
}

namespace {

void check_nonnegative(std::span<const double> rho, const EnergySpec& spec) {
    if (spec.internal == InternalEnergy::None) return;
    const bool integer_power =
        spec.internal == InternalEnergy::Power && spec.exponent == std::floor(spec.exponent);
    if (integer_power) return;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        if (rho[j] < 0.0) {
            std::ostringstream msg;
            msg << "internal energy undefined for negative density at node " << j << " (" << rho[j] << ")";
            throw InvalidInput(msg.str());
        }
    }
}

// First variation δF/δρ at each node, without the (Δx)^d weight.
void first_variation(std::span<const double> rho, const EnergySpec& spec, std::span<double> out) {
    if (spec.interaction) {
        spec.interaction->apply(rho, out);
    } else {
        std::fill(out.begin(), out.end(), 0.0);
    }
    for (std::size_t j = 0; j < rho.size(); ++j) {
        out[j] += internal_derivative(spec, rho[j]);
        if (!spec.potential.empty()) out[j] += spec.potential[j];
    }
}

}  // namespace

double eval_free_energy(std::span<const double> rho, const EnergySpec& spec, const GridSpec& grid) {
    if (rho.size() != grid.num_nodes()) throw InvalidInput("density slice has wrong size");
    check_nonnegative(rho, spec);
    double s = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        s += internal_density(spec, rho[j]);
        if (!spec.potential.empty()) s += spec.potential[j] * rho[j];
    }
    if (spec.interaction) {
        std::vector<double> conv(rho.size());
        spec.interaction->apply(rho, conv);
        double q = 0.0;
        for (std::size_t j = 0; j < rho.size(); ++j) q += conv[j] * rho[j];
        s += 0.5 * q;
    }
    return s * grid.cell_volume();
}

void free_energy_gradient(std::span<const double> rho, const EnergySpec& spec, const GridSpec& grid,
                          std::span<double> out) {
    if (rho.size() != grid.num_nodes() || out.size() != rho.size()) throw InvalidInput("density slice has wrong size");
    check_nonnegative(rho, spec);
    first_variation(rho, spec, out);
    const double vol = grid.cell_volume();
    for (double& v : out) v *= vol;
}

double eval_energy(std::span<const double> rho_final, std::span<const double> rho_initial, const EnergySpec& spec,
                   const GridSpec& grid) {
    switch (spec.variant) {
        case EnergyVariant::Classical: return eval_free_energy(rho_final, spec, grid);
        case EnergyVariant::HigherOrder: {
            if (rho_initial.size() != rho_final.size()) throw InvalidInput("initial slice has wrong size");
            std::vector<double> g0(rho_initial.size());
            first_variation(rho_initial, spec, g0);
            double lin = 0.0;
            for (std::size_t j = 0; j < g0.size(); ++j) lin += g0[j] * rho_final[j];
            return 0.5 * eval_free_energy(rho_final, spec, grid) + 0.5 * lin * grid.cell_volume();
        }
        case EnergyVariant::TargetMeasure: {
            double s = 0.0;
            for (std::size_t j = 0; j < rho_final.size(); ++j) {
                const double d = rho_final[j] - spec.target[j];
                s += d * d;
            }
            return std::sqrt(s * grid.cell_volume()) <= spec.target_radius ? 0.0
                                                                            : std::numeric_limits<double>::infinity();
        }
    }
    return 0.0;
}

void grad_energy_slice(std::span<const double> rho_final, std::span<const double> rho_initial, const EnergySpec& spec,
                       const GridSpec& grid, std::span<double> out) {
    switch (spec.variant) {
        case EnergyVariant::Classical: free_energy_gradient(rho_final, spec, grid, out); return;
        case EnergyVariant::HigherOrder: {
            if (rho_initial.size() != rho_final.size()) throw InvalidInput("initial slice has wrong size");
            free_energy_gradient(rho_final, spec, grid, out);
            std::vector<double> g0(rho_initial.size());
            first_variation(rho_initial, spec, g0);
            const double vol = grid.cell_volume();
            for (std::size_t j = 0; j < out.size(); ++j) out[j] = 0.5 * out[j] + 0.5 * g0[j] * vol;
            return;
        }
        case EnergyVariant::TargetMeasure: std::fill(out.begin(), out.end(), 0.0); return;
    }
}

std::vector<double> grad_energy(const PrimalState& u, std::span<const double> rho_initial, const EnergySpec& spec,
                                const GridSpec& grid) {
    std::vector<double> g(u.flat().size(), 0.0);
    const std::size_t last = u.slices() - 1;
    grad_energy_slice(u.rho_slice(last), rho_initial, spec, grid,
                      std::span<double>(g.data() + last * u.nodes(), u.nodes()));
    return g;
}

}  // namespace wgf
