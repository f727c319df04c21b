#pragma once

#include "wgf/grid.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wgf {

using KernelFunction = std::function<double(std::span<const double> x)>;

namespace kernels {
/// |x|^a/a − |x|^b/b with |x|^0/0 read as ln|x|.
KernelFunction power_law(double a, double b);
/// c|x|²/2
KernelFunction quadratic_attraction(double c = 1.0);
/// −c ln|x|
KernelFunction log_repulsion(double c = 1.0);
/// amplitude·exp(−|x|²/width²)
KernelFunction gaussian_kernel(double amplitude, double width);
/// (χ/2π) ln|x|
KernelFunction newtonian_2d(double chi = 1.0);
/// c|x|²/2 (as a drift potential)
KernelFunction quadratic_drift(double c = 1.0);
/// −c ln|x| (as a drift potential)
KernelFunction log_drift(double c);
/// Radial kernel by linear interpolation of (r, W) samples; r must be increasing.
KernelFunction tabulated_radial(std::vector<double> r, std::vector<double> w);
}  // namespace kernels

/// Average of W over [−h,h]^dim, used in place of a singular W(0).
double regularize_kernel_origin(const KernelFunction& w, std::span<const double> h);
double regularize_kernel_origin(const KernelFunction& w, double h);

/// Linear map ρ ↦ (Σ_l W_{j,l} ρ_l (Δx)^d)_j on one spatial slice.
class InteractionOperator {
public:
    virtual ~InteractionOperator() = default;
    virtual std::size_t size() const = 0;
    virtual void apply(std::span<const double> rho, std::span<double> out) const = 0;
};

/// Translation-invariant kernel stored as an offset stencil, applied by zero-padded FFT.
class FftConvolution final : public InteractionOperator {
public:
    /// stencil holds W(o·Δx) for offsets o ∈ [−N_l, N_l] per axis, x fastest.
    FftConvolution(const GridSpec& grid, std::vector<double> stencil);
    ~FftConvolution() override;
    FftConvolution(const FftConvolution&) = delete;
    FftConvolution& operator=(const FftConvolution&) = delete;

    std::size_t size() const override { return nodes_; }
    void apply(std::span<const double> rho, std::span<double> out) const override;
    const std::vector<double>& stencil() const { return stencil_; }

private:
    struct Plans;
    GridSpec grid_;
    std::vector<double> stencil_;
    std::size_t nodes_;
    std::array<std::size_t, 2> pad_{1, 1};
    std::vector<double> kernel_hat_;  // interleaved complex
    std::unique_ptr<Plans> plans_;
};

/// Full W_{j,l} matrix, for kernels that are not translation invariant.
class DenseInteraction final : public InteractionOperator {
public:
    DenseInteraction(const GridSpec& grid, std::vector<double> matrix);
    std::size_t size() const override { return n_; }
    void apply(std::span<const double> rho, std::span<double> out) const override;

private:
    std::size_t n_;
    double vol_;
    std::vector<double> w_;
};

/// Samples W on the offset stencil; a non-finite value at the origin is replaced by the cell average.
std::vector<double> kernel_stencil(const KernelFunction& w, const GridSpec& grid, bool regularize_origin = true);
std::shared_ptr<FftConvolution> make_convolution(const KernelFunction& w, const GridSpec& grid,
                                                 bool regularize_origin = true);
std::shared_ptr<DenseInteraction> make_dense_interaction(
    const std::function<double(std::span<const double>, std::span<const double>)>& w, const GridSpec& grid);

enum class InternalEnergy { None, Entropy, Power };
enum class EnergyVariant { Classical, HigherOrder, TargetMeasure };

std::string to_string(InternalEnergy e);
std::string to_string(EnergyVariant v);
InternalEnergy internal_energy_from_string(const std::string& s);
EnergyVariant energy_variant_from_string(const std::string& s);

struct EnergySpec {
    InternalEnergy internal = InternalEnergy::None;
    double exponent = 2.0;       // m for Power
    double diffusion = 1.0;      // ν multiplying U
    std::vector<double> potential;  // V_j on spatial nodes; empty means zero
    std::shared_ptr<const InteractionOperator> interaction;
    EnergyVariant variant = EnergyVariant::Classical;
    std::vector<double> target;  // ρ₁ for TargetMeasure
    double target_radius = 0.0;
    double artificial_diffusion = 0.0;  // ε in ε Σ ρ² (Δx)^d
    double entropy_floor = 1e-300;

    void validate(const GridSpec& grid) const;
};

/// U(s) + ε s², the internal energy density including artificial diffusion.
double internal_density(const EnergySpec& spec, double s);
double internal_derivative(const EnergySpec& spec, double s);

/// F^h(ρ): internal + drift + ½ interaction.
double eval_free_energy(std::span<const double> rho, const EnergySpec& spec, const GridSpec& grid);
/// (∇F^h)_j including the (Δx)^d factor.
void free_energy_gradient(std::span<const double> rho, const EnergySpec& spec, const GridSpec& grid,
                          std::span<double> out);

/// Variant-dependent energy of one JKO step: F (classical), H (higher order), or the target indicator.
double eval_energy(std::span<const double> rho_final, std::span<const double> rho_initial, const EnergySpec& spec,
                   const GridSpec& grid);
void grad_energy_slice(std::span<const double> rho_final, std::span<const double> rho_initial, const EnergySpec& spec,
                       const GridSpec& grid, std::span<double> out);

/// Gradient with respect to the full primal vector; nonzero only on the final-time ρ entries.
std::vector<double> grad_energy(const PrimalState& u, std::span<const double> rho_initial, const EnergySpec& spec,
                                const GridSpec& grid);

}  // namespace wgf
