#include "wgf/solver.hpp"

#include "wgf/prox.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace wgf {

std::string to_string(StopReason r) { return r == StopReason::Converged ? "converged" : "iter_max"; }

std::string to_string(TimeQuadrature q) {
    switch (q) {
        case TimeQuadrature::Auto: return "auto";
        case TimeQuadrature::Uniform: return "uniform";
        case TimeQuadrature::Trapezoid: return "trapezoid";
    }
    return "auto";
}

TimeQuadrature time_quadrature_from_string(const std::string& s) {
    if (s == "auto") return TimeQuadrature::Auto;
    if (s == "uniform") return TimeQuadrature::Uniform;
    if (s == "trapezoid") return TimeQuadrature::Trapezoid;
    throw InvalidInput("unknown time quadrature '" + s + "'");
}

std::vector<double> kinetic_slice_weights(const GridSpec& grid, TimeQuadrature q) {
    std::vector<double> w(grid.num_slices(), 1.0);
    if (q == TimeQuadrature::Auto)
        q = grid.scheme == Scheme::CrankNicolson ? TimeQuadrature::Trapezoid : TimeQuadrature::Uniform;
    if (q == TimeQuadrature::Trapezoid) w.front() = w.back() = 0.5;
    return w;
}

void SolverConfig::validate() const {
    if (lambda && !(*lambda > 0.0)) throw InvalidInput("lambda must be positive");
    if (sigma && !(*sigma > 0.0)) throw InvalidInput("sigma must be positive");
    if (!lambda && !sigma) throw InvalidInput("at least one of lambda and sigma must be given");
    if (!(step_product > 0.0)) throw InvalidInput("step_product must be positive");
    if (iter_max < 1) throw InvalidInput("iter_max must be at least 1");
    if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw InvalidInput("stopping tolerances must be positive");
    if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
    if (n_outer < 1) throw InvalidInput("n_outer must be at least 1");
    if (log_interval < 1) throw InvalidInput("log_interval must be at least 1");
    if (!(constraint_slack >= 0.0)) throw InvalidInput("constraint_slack must be nonnegative");
}

namespace {

double rel_change(std::span<const double> a, std::span<const double> b) {
    double d = 0.0, n = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = a[i] - b[i];
        d += e * e;
        n += a[i] * a[i];
    }
    n = std::sqrt(n);
    if (n < 1e-300) return 0.0;
    return std::sqrt(d) / n;
}

struct Steps {
    double lambda, sigma, opnorm;
};

Steps resolve_steps(const SolverConfig& config, const ConstraintSet& set, std::vector<std::string>& warnings) {
    const auto est = estimate_opnorm(set, config.opnorm_tol, config.opnorm_max_iter);
    if (!est.converged) {
        std::ostringstream msg;
        msg << "operator norm estimate did not converge in " << est.iterations << " iterations (value " << est.value
            << ")";
        warnings.push_back(msg.str());
    }
    Steps s{0.0, 0.0, est.value};
    if (config.lambda && config.sigma) {
        s.lambda = *config.lambda;
        s.sigma = *config.sigma;
    } else if (config.lambda) {
        s.lambda = *config.lambda;
        s.sigma = config.step_product / (s.lambda * est.value);
    } else {
        s.sigma = *config.sigma;
        s.lambda = config.step_product / (s.sigma * est.value);
    }
    const double prod = s.sigma * s.lambda * est.value;
    if (prod >= 1.0) {
        std::ostringstream msg;
        msg << "sigma*lambda*lambda_max = " << prod << " >= 1; convergence is not guaranteed";
        warnings.push_back(msg.str());
    }
    return s;
}

// Smooth part of the objective in the per-node scaling used by the iteration.
struct SmoothTerm {
    std::function<double(const PrimalState&)> value;
    std::function<void(const PrimalState&, std::span<double>)> gradient;
};

struct RunResult {
    PrimalState u;
    std::vector<double> phi;
    int iterations = 0;
    StopReason reason = StopReason::IterMax;
    double objective = 0.0;
    std::vector<double> residuals;
    std::vector<IterationRecord> log;
};

RunResult run_primal_dual(const GridSpec& grid, const ConstraintSet& set, const SmoothTerm* smooth, PrimalState u,
                          std::vector<double> phi, const Steps& steps, const SolverConfig& config,
                          const IterationObserver& observer) {
    const std::size_t n = u.flat().size();
    const std::size_t rows = set.total_rows();
    if (phi.size() != rows) phi.assign(rows, 0.0);
    // The iteration works with the kinetic sum divided by (Δx)^d Δt, which maps
    // the user steps to λ·w and σ/w.
    const double w = grid.cell_volume() * grid.dt();
    const double lambda = steps.lambda * w, sigma = steps.sigma / w;

    const auto weights = kinetic_slice_weights(grid, config.time_quadrature);
    PrimalState u_new(grid);
    std::vector<double> ubar(u.flat().begin(), u.flat().end());
    std::vector<double> au(rows), phi_new(rows), at(n), v(n);
    std::vector<double> g_old(n, 0.0), g_new(n, 0.0);

    auto objective_of = [&](const PrimalState& x) {
        double f = kinetic_sum(x, weights);
        if (smooth) f += smooth->value(x);
        return f;
    };
    if (smooth) smooth->gradient(u, g_old);
    double obj = objective_of(u);

    RunResult out;
    for (int it = 1; it <= config.iter_max; ++it) {
        set.apply(ubar, au);
        for (std::size_t r = 0; r < rows; ++r) au[r] = phi[r] + sigma * au[r];
        prox_indicator_conjugate(au, sigma, set, phi_new);

        set.adjoint(phi_new, at);
        auto uf = u.flat();
        for (std::size_t i = 0; i < n; ++i) v[i] = uf[i] - lambda * (g_old[i] + at[i]);
        prox_phi_field(v, u_new.flat(), grid.dim, lambda, weights);

        auto un = u_new.flat();
        if (smooth) {
            smooth->gradient(u_new, g_new);
            for (std::size_t i = 0; i < n; ++i) ubar[i] = 2.0 * un[i] - uf[i] + lambda * (g_old[i] - g_new[i]);
        } else {
            for (std::size_t i = 0; i < n; ++i) ubar[i] = 2.0 * un[i] - uf[i];
        }

        const double obj_new = objective_of(u_new);
        if (!std::isfinite(obj_new)) {
            std::ostringstream msg;
            msg << "non-finite objective at iteration " << it << " (lambda=" << lambda << ", sigma=" << sigma
                << ", previous objective " << obj << ", max |phi| ";
            double pm = 0.0;
            for (double p : phi_new) pm = std::max(pm, std::abs(p));
            msg << pm << ")";
            throw SolverDiverged(msg.str());
        }

        const bool log_now = it % config.log_interval == 0 || it == config.iter_max;
        auto chk = check_stopping(obj_new, obj, un, uf, phi_new, phi, set, config.eps1, config.eps2,
                                  config.constraint_slack);
        if (log_now) {
            IterationRecord rec;
            rec.iteration = it;
            rec.objective = w * obj_new;
            rec.rel_objective = chk.rel_objective;
            rec.rel_primal = chk.rel_primal;
            rec.rel_dual = chk.rel_dual;
            rec.residuals = chk.residuals.empty() ? set.residual_norms(un) : chk.residuals;
            out.log.push_back(std::move(rec));
        }

        std::swap(u, u_new);
        phi.swap(phi_new);
        g_old.swap(g_new);
        obj = obj_new;
        out.iterations = it;
        if (observer) observer(it, u);
        if (chk.converged()) {
            out.reason = StopReason::Converged;
            out.residuals = chk.residuals;
            break;
        }
    }
    if (out.residuals.empty()) out.residuals = set.residual_norms(u.flat());
    out.objective = obj;
    out.u = std::move(u);
    out.phi = std::move(phi);
    return out;
}

void fill_initial(PrimalState& u, std::span<const double> rho0) {
    auto s0 = u.rho_slice(0);
    std::copy(rho0.begin(), rho0.end(), s0.begin());
}

}  // namespace

double kinetic_sum(const PrimalState& u, std::span<const double> slice_weights) {
    const std::size_t field = u.rho().size();
    const std::size_t nodes = u.nodes();
    auto rho = u.rho();
    double s = 0.0;
    for (std::size_t i = 0; i < field; ++i) {
        const double w = slice_weights.empty() ? 1.0 : slice_weights[i / nodes];
        double m2 = 0.0;
        for (int c = 0; c < u.dim(); ++c) {
            const double mc = u.momentum(c)[i];
            m2 += mc * mc;
        }
        if (rho[i] > 0.0) {
            s += w * m2 / rho[i];
        } else if (m2 != 0.0 || rho[i] < 0.0) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return s;
}

StoppingCheck check_stopping(double objective, double prev_objective, std::span<const double> u,
                             std::span<const double> u_prev, std::span<const double> phi,
                             std::span<const double> phi_prev, const ConstraintSet& set, double eps1, double eps2,
                             double slack) {
    StoppingCheck c;
    c.rel_objective = std::abs(objective) < 1e-300 ? 0.0 : std::abs(objective - prev_objective) / std::abs(objective);
    c.rel_primal = rel_change(u, u_prev);
    c.rel_dual = rel_change(phi, phi_prev);
    c.objective_ok = c.rel_objective < eps1;
    c.change_ok = std::max(c.rel_primal, c.rel_dual) < eps2;
    if (c.objective_ok && c.change_ok) {
        c.residuals = set.residual_norms(u);
        c.residuals_ok = true;
        for (std::size_t i = 0; i < set.size(); ++i)
            if (c.residuals[i] > set.block(i).radius * (1.0 + slack)) c.residuals_ok = false;
    }
    return c;
}

GeodesicResult solve_geodesic(const GridSpec& grid, std::span<const double> rho0, std::span<const double> rho1,
                              const RelaxationPolicy& policy, const SolverConfig& config,
                              const IterationObserver& observer) {
    config.validate();
    auto set = assemble_geodesic(grid, rho0, rho1, policy);
    SolveReport report;
    report.warnings = set.warnings;
    const Steps steps = resolve_steps(config, set, report.warnings);

    PrimalState u0(grid);
    fill_initial(u0, rho0);
    auto run = run_primal_dual(grid, set, nullptr, std::move(u0), {}, steps, config, observer);

    const double w = grid.cell_volume() * grid.dt();
    report.iterations = run.iterations;
    report.kinetic = w * kinetic_sum(run.u, kinetic_slice_weights(grid, config.time_quadrature));
    report.objective = report.kinetic;
    report.wasserstein = std::sqrt(report.kinetic);
    report.residuals = run.residuals;
    report.radii = set.radii();
    report.stop_reason = run.reason;
    report.lambda = steps.lambda;
    report.sigma = steps.sigma;
    report.opnorm = steps.opnorm;
    report.log = std::move(run.log);
    report.step_iterations = {run.iterations};
    report.step_reasons = {run.reason};
    return {std::move(run.u), std::move(run.phi), std::move(report)};
}

namespace {

JkoStepResult jko_step_with_steps(const GridSpec& grid, std::span<const double> rho_prev, const EnergySpec& spec,
                                  const ConstraintSet& set, const Steps& steps, const SolverConfig& config,
                                  const WarmStart* warm, const IterationObserver& observer) {
    const double w = grid.cell_volume() * grid.dt();
    const double scale = 2.0 * config.tau / w;
    const std::size_t n = grid.num_nodes();
    const std::size_t last = grid.num_slices() - 1;
    std::vector<double> rho_init(rho_prev.begin(), rho_prev.end());

    SmoothTerm smooth;
    const bool has_energy = spec.variant != EnergyVariant::TargetMeasure;
    smooth.value = [&, scale](const PrimalState& u) {
        return has_energy ? scale * eval_energy(u.rho_slice(last), rho_init, spec, grid) : 0.0;
    };
    smooth.gradient = [&, scale](const PrimalState& u, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        if (!has_energy) return;
        auto gs = g.subspan(last * n, n);
        grad_energy_slice(u.rho_slice(last), rho_init, spec, grid, gs);
        for (double& v : gs) v *= scale;
    };

    PrimalState u0(grid);
    std::vector<double> phi0;
    if (warm) {
        if (warm->u.flat().size() != u0.flat().size()) throw InvalidInput("warm start has wrong size");
        u0 = warm->u;
        phi0 = warm->dual;
    } else {
        fill_initial(u0, rho_prev);
    }
    auto run = run_primal_dual(grid, set, &smooth, std::move(u0), std::move(phi0), steps, config, observer);

    SolveReport report;
    report.iterations = run.iterations;
    report.kinetic = w * kinetic_sum(run.u, kinetic_slice_weights(grid, config.time_quadrature));
    report.objective = w * run.objective;
    report.wasserstein = std::sqrt(report.kinetic);
    report.residuals = run.residuals;
    report.radii = set.radii();
    report.stop_reason = run.reason;
    report.lambda = steps.lambda;
    report.sigma = steps.sigma;
    report.opnorm = steps.opnorm;
    report.log = std::move(run.log);
    report.step_iterations = {run.iterations};
    report.step_reasons = {run.reason};
    return {std::move(run.u), std::move(run.phi), std::move(report)};
}

ConstraintSet flow_constraints(const GridSpec& grid, std::span<const double> rho_prev, const EnergySpec& spec,
                               const RelaxationPolicy& policy) {
    if (spec.variant == EnergyVariant::TargetMeasure) {
        auto set = assemble_geodesic(grid, rho_prev, spec.target, policy);
        // The target block carries the energy's own radius.
        auto blocks = set.blocks();
        blocks.back().radius = spec.target_radius;
        ConstraintSet out(set.cols(), std::move(blocks));
        out.warnings = set.warnings;
        return out;
    }
    return assemble_flow(grid, rho_prev, policy);
}

}  // namespace

JkoStepResult jko_step(const GridSpec& grid, std::span<const double> rho_prev, const EnergySpec& spec,
                       const RelaxationPolicy& policy, const SolverConfig& config, const WarmStart* warm,
                       const IterationObserver& observer) {
    config.validate();
    spec.validate(grid);
    auto set = flow_constraints(grid, rho_prev, spec, policy);
    std::vector<std::string> warnings = set.warnings;
    const Steps steps = resolve_steps(config, set, warnings);
    auto res = jko_step_with_steps(grid, rho_prev, spec, set, steps, config, warm, observer);
    res.report.warnings = std::move(warnings);
    return res;
}

WarmStart shift_warm_start(const JkoStepResult& step, std::span<const double> rho_old,
                           std::span<const double> rho_new) {
    WarmStart w{step.u, step.dual};
    const std::size_t slices = w.u.slices();
    for (std::size_t k = 0; k < slices; ++k) {
        auto s = w.u.rho_slice(k);
        for (std::size_t j = 0; j < s.size(); ++j) s[j] = std::max(s[j] - rho_old[j] + rho_new[j], 0.0);
    }
    return w;
}

FlowResult jko_sequence(const GridSpec& grid, std::span<const double> rho_init, const EnergySpec& spec,
                        const RelaxationPolicy& policy, const SolverConfig& config, const StepObserver& on_step) {
    config.validate();
    spec.validate(grid);
    FlowResult out;
    std::vector<double> rho(rho_init.begin(), rho_init.end());
    out.snapshots.push_back(rho);
    out.times.push_back(0.0);
    out.report.energy_trace.push_back(eval_free_energy(rho, spec, grid));

    // The constraint operator does not depend on ρ_prev, so one norm estimate serves every step.
    auto first = flow_constraints(grid, rho, spec, policy);
    out.report.warnings = first.warnings;
    const Steps steps = resolve_steps(config, first, out.report.warnings);
    out.report.lambda = steps.lambda;
    out.report.sigma = steps.sigma;
    out.report.opnorm = steps.opnorm;
    out.report.stop_reason = StopReason::Converged;

    std::optional<WarmStart> warm;
    const std::size_t last = grid.num_slices() - 1;
    for (int step = 1; step <= config.n_outer; ++step) {
        auto set = step == 1 ? std::move(first) : flow_constraints(grid, rho, spec, policy);
        auto res = jko_step_with_steps(grid, rho, spec, set, steps, config, warm ? &*warm : nullptr, {});
        auto next_span = res.u.rho_slice(last);
        std::vector<double> next(next_span.begin(), next_span.end());

        out.report.iterations += res.report.iterations;
        out.report.step_iterations.push_back(res.report.iterations);
        out.report.step_reasons.push_back(res.report.stop_reason);
        if (res.report.stop_reason != StopReason::Converged) out.report.stop_reason = StopReason::IterMax;
        for (auto& rec : res.report.log) {
            rec.step = step;
            out.report.log.push_back(rec);
        }
        out.report.residuals = res.report.residuals;
        out.report.radii = res.report.radii;
        out.report.kinetic = res.report.kinetic;
        out.report.objective = res.report.objective;
        out.report.wasserstein = res.report.wasserstein;

        warm = shift_warm_start(res, rho, next);
        if (on_step) on_step(step, res);
        rho = std::move(next);
        out.snapshots.push_back(rho);
        out.times.push_back(step * config.tau);
        out.report.energy_trace.push_back(eval_free_energy(rho, spec, grid));
    }
    out.report.times = out.times;
    return out;
}

}  // namespace wgf
