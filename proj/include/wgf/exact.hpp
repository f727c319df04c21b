#pragma once

#include "wgf/grid.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace wgf {

/// g(x) = M/(πθ²)^{d/2} · exp(−|x−μ|²/θ²); `mass` is the total mass M.
struct GaussianParams {
    std::array<double, 2> mu{0.0, 0.0};
    double theta = 1.0;
    double mass = 1.0;

    void validate() const;
    bool operator==(const GaussianParams&) const = default;
};

double gaussian_density(const GaussianParams& p, std::span<const double> x);

struct DensityMomentum {
    double rho = 0.0;
    std::array<double, 2> m{0.0, 0.0};
};

/// Displacement interpolation between two isotropic Gaussians of equal mass.
DensityMomentum gaussian_geodesic(const GaussianParams& p0, const GaussianParams& p1, double t,
                                  std::span<const double> x);

/// Squared Wasserstein distance between the two Gaussians, M·(d θ₀²(r−1)²/2 + |μ₁−μ₀|²), r = θ₁/θ₀.
double gaussian_wasserstein_sq(const GaussianParams& p0, const GaussianParams& p1, int dim);

/// Barenblatt profile of ∂_tρ = Δρ^m in one dimension (alpha = 1 makes it exact).
double barenblatt(double x, double t, double m, double C, double t0, double alpha = 1.0);
double barenblatt_support_radius(double t, double m, double C, double t0, double alpha = 1.0);

/// (C − (m−1)V/m)_+^{1/(m−1)}
double fp_profile(double v, double m, double C);

/// C such that ∫_a^b fp_profile(V(x)) dx = mass, found by bisection.
double fp_steady_constant(double m, const std::function<double(double)>& potential, double mass, double a, double b);
double fp_steady_state(double x, double m, const std::function<double(double)>& potential, double mass, double a,
                       double b);

/// Discrete steady state on the nodes: Σ_j ρ_j (Δx)^d = mass with ρ_j = fp_profile(V_j, m, C).
std::vector<double> fp_steady_state_discrete(const GridSpec& grid, double m, std::span<const double> potential,
                                             double mass);

/// (1/π)√(2 − x²)_+, the equilibrium for W(x) = x²/2 − ln|x| with unit mass.
double aggregation_equilibrium_1d(double x);

/// (R_i, R_o) = (√(α/β), √(α/β + 1)).
std::pair<double, double> milling_radii(double alpha, double beta);

/// (1/(Π N_l · S)) Σ_k Σ_{interior j} |a_{j,k} − b_{j,k}| over S snapshots.
double l1_error(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                const GridSpec& grid);
double l1_error(const DensityField& a, const DensityField& b, const GridSpec& grid);

/// l1_error between a run at τ and one at τ/2, compared at the coarse run's outer times.
double self_convergence_error(const std::vector<std::vector<double>>& coarse, std::span<const double> coarse_times,
                              const std::vector<std::vector<double>>& fine, std::span<const double> fine_times,
                              const GridSpec& grid);

/// Composite Gauss–Legendre quadrature of f over [a, b] with `panels` equal panels.
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 2000);

}  // namespace wgf
