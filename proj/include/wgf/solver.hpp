#pragma once

#include "wgf/constraints.hpp"
#include "wgf/energy.hpp"
#include "wgf/grid.hpp"

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wgf {

enum class StopReason { Converged, IterMax };
std::string to_string(StopReason r);

/// Raised when an iterate becomes non-finite.
class SolverDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Time weights of the kinetic action Σ_k ω_k Σ_j Φ(ρ_{j,k}, m_{j,k}) (Δx)^d Δt.
/// Auto picks trapezoid weights for Crank–Nicolson and uniform weights otherwise.
enum class TimeQuadrature { Auto, Uniform, Trapezoid };
std::string to_string(TimeQuadrature q);
TimeQuadrature time_quadrature_from_string(const std::string& s);

std::vector<double> kinetic_slice_weights(const GridSpec& grid, TimeQuadrature q);

struct SolverConfig {
    /// Primal step.  When unset it is derived from sigma and step_product.
    std::optional<double> lambda;
    /// Dual step.  When unset, σ = step_product / (λ·λ_max(AAᵗ)).
    std::optional<double> sigma;
    double step_product = 0.99;  // σλ·λ_max(AAᵗ) for derived steps
    int iter_max = 100000;
    double eps1 = 1e-5;
    double eps2 = 1e-5;
    double tau = 0.1;
    int n_outer = 1;
    int log_interval = 100;
    double opnorm_tol = 1e-8;
    int opnorm_max_iter = 20000;
    /// Residual gate accepts ‖A_i u − b_i‖ ≤ δ_i(1 + slack).
    double constraint_slack = 1e-3;
    TimeQuadrature time_quadrature = TimeQuadrature::Auto;

    void validate() const;
};

struct IterationRecord {
    int step = 0;
    int iteration = 0;
    double objective = 0.0;
    double rel_objective = 0.0;
    double rel_primal = 0.0;
    double rel_dual = 0.0;
    std::vector<double> residuals;
};

struct SolveReport {
    int iterations = 0;
    double objective = 0.0;   // kinetic action plus the energy term, in physical scaling
    double kinetic = 0.0;     // Σ Φ(ρ, m) (Δx)^d Δt
    double wasserstein = 0.0; // √kinetic
    std::vector<double> residuals;
    std::vector<double> radii;
    std::vector<double> energy_trace;
    std::vector<double> times;
    StopReason stop_reason = StopReason::IterMax;
    double lambda = 0.0;
    double sigma = 0.0;
    double opnorm = 0.0;
    std::vector<IterationRecord> log;
    std::vector<int> step_iterations;
    std::vector<StopReason> step_reasons;
    std::vector<std::string> warnings;
};

/// Called after every iteration with the iteration count and current primal iterate.
using IterationObserver = std::function<void(int iteration, const PrimalState& u)>;

struct StoppingCheck {
    bool objective_ok = false;
    bool change_ok = false;
    bool residuals_ok = false;
    double rel_objective = 0.0;
    double rel_primal = 0.0;
    double rel_dual = 0.0;
    std::vector<double> residuals;
    bool converged() const { return objective_ok && change_ok && residuals_ok; }
};

/// Convergence monitors on two consecutive iterates; residuals are only evaluated
/// when the cheaper monitors pass.
StoppingCheck check_stopping(double objective, double prev_objective, std::span<const double> u,
                             std::span<const double> u_prev, std::span<const double> phi,
                             std::span<const double> phi_prev, const ConstraintSet& set, double eps1, double eps2,
                             double slack = 0.0);

/// Σ_k ω_k Σ_j Φ(ρ_{j,k}, m_{j,k}) without the (Δx)^d Δt factor; empty weights mean ω ≡ 1.
double kinetic_sum(const PrimalState& u, std::span<const double> slice_weights = {});

struct GeodesicResult {
    PrimalState u;
    std::vector<double> dual;
    SolveReport report;
};

GeodesicResult solve_geodesic(const GridSpec& grid, std::span<const double> rho0, std::span<const double> rho1,
                              const RelaxationPolicy& policy, const SolverConfig& config,
                              const IterationObserver& observer = {});

struct WarmStart {
    PrimalState u;
    std::vector<double> dual;
};

struct JkoStepResult {
    PrimalState u;
    std::vector<double> dual;
    SolveReport report;
};

JkoStepResult jko_step(const GridSpec& grid, std::span<const double> rho_prev, const EnergySpec& spec,
                       const RelaxationPolicy& policy, const SolverConfig& config, const WarmStart* warm = nullptr,
                       const IterationObserver& observer = {});

/// Warm start for the next step: ρ-part shifted by the density increment on every slice and clamped at 0.
WarmStart shift_warm_start(const JkoStepResult& step, std::span<const double> rho_old, std::span<const double> rho_new);

struct FlowResult {
    std::vector<std::vector<double>> snapshots;  // ρ(·, t_k), k = 0..n_outer
    std::vector<double> times;
    SolveReport report;
};

using StepObserver = std::function<void(int step, const JkoStepResult& result)>;

FlowResult jko_sequence(const GridSpec& grid, std::span<const double> rho_init, const EnergySpec& spec,
                        const RelaxationPolicy& policy, const SolverConfig& config,
                        const StepObserver& on_step = {});

}  // namespace wgf
