#pragma once

#include "wgf/constraints.hpp"
#include "wgf/grid.hpp"

#include <array>
#include <span>
#include <vector>

namespace wgf {

/// Φ(ρ, m) = |m|²/ρ, extended by 0 at (0,0) and +∞ otherwise.
double kinetic_value(double rho, std::span<const double> m);

struct ProxPoint {
    double rho = 0.0;
    std::array<double, 2> m{0.0, 0.0};
};

/// Largest real root of P(x) = (x−ρ)(x+λ)² − (λ/2)|m|².
double prox_phi_root(double rho, double m_norm_sq, double lambda);

/// Minimizer of ½|(x, y)−(ρ, m)|² + λ|y|²/(2x), i.e. Prox_{(λ/2)Φ}(ρ, m):
/// ρ* = prox_phi_root(ρ, |m|², λ) and m* = ρ* m/(ρ* + λ), or (0, 0) when ρ* ≤ 0.
/// m has 1 or 2 components.
ProxPoint prox_phi_point(double rho, std::span<const double> m, double lambda);

/// Prox_{λΦ} applied pointwise over a primal vector laid out as [ρ; m_1; ...; m_dim],
/// which is prox_phi_point with step 2λ.  Optional per-slice weights scale the
/// step on each time slice.  The ρ-part of the result is exactly nonnegative.
void prox_phi_field(std::span<const double> u, std::span<double> out, int dim, double lambda,
                    std::span<const double> slice_weights = {});
PrimalState prox_phi_field(const PrimalState& u, double lambda);

void project_ball(std::span<const double> x, std::span<const double> center, double radius, std::span<double> out);
std::vector<double> project_ball(std::span<const double> x, std::span<const double> center, double radius);

/// Blockwise Prox_{σ i*}(φ) = φ − σ Proj_{B(b_i, δ_i)}(φ/σ).
void prox_indicator_conjugate(std::span<const double> phi, double sigma, const ConstraintSet& set,
                              std::span<double> out);

}  // namespace wgf
