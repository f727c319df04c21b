#include "wgf/cli/commands.hpp"

#include "wgf/cli/io.hpp"
#include "wgf/exact.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace wgf::cli {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string to_string(StudyKind k) {
    switch (k) {
        case StudyKind::IterationRate: return "IterationRate";
        case StudyKind::TauRefinement: return "TauRefinement";
        case StudyKind::GridRefinement: return "GridRefinement";
        case StudyKind::DeltaScaling: return "DeltaScaling";
    }
    return "IterationRate";
}

StudyKind study_from_string(const std::string& s) {
    std::string key;
    for (char ch : s)
        if (ch != '_' && ch != '-') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (key == "iterationrate") return StudyKind::IterationRate;
    if (key == "taurefinement") return StudyKind::TauRefinement;
    if (key == "gridrefinement") return StudyKind::GridRefinement;
    if (key == "deltascaling") return StudyKind::DeltaScaling;
    throw InvalidInput("unknown study kind '" + s + "'");
}

int thread_count(const RunOptions& opts) {
    if (opts.sequential) return 1;
    if (opts.threads > 0) return opts.threads;
    if (const char* env = std::getenv("WGF_NUM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::mutex log_mutex;

void say(const RunOptions& opts, const std::string& msg, bool always = false) {
    if (opts.quiet && !always) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    (opts.log ? *opts.log : std::cerr) << msg << "\n";
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int exit_code(StopReason r) { return r == StopReason::Converged ? kExitConverged : kExitIterMax; }

const GaussianParams* single_gaussian(const ProfileSpec& p) {
    return p.kind == ProfileSpec::Kind::Gaussian && p.gaussians.size() == 1 ? &p.gaussians[0] : nullptr;
}

void write_log_csv(const fs::path& path, const SolveReport& r) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << "step,iteration,objective,rel_objective,rel_primal,rel_dual";
    const std::size_t nres = r.log.empty() ? 0 : r.log.front().residuals.size();
    for (std::size_t i = 0; i < nres; ++i) out << ",residual_" << i;
    out << "\n";
    for (const auto& rec : r.log) {
        out << rec.step << "," << rec.iteration << "," << format_double(rec.objective) << ","
            << format_double(rec.rel_objective) << "," << format_double(rec.rel_primal) << ","
            << format_double(rec.rel_dual);
        for (std::size_t i = 0; i < nres; ++i)
            out << "," << (i < rec.residuals.size() ? format_double(rec.residuals[i]) : std::string());
        out << "\n";
    }
}

json report_json(const SolveReport& r, double seconds) {
    json j{{"stop_reason", to_string(r.stop_reason)},
           {"iterations", r.iterations},
           {"objective", r.objective},
           {"kinetic", r.kinetic},
           {"wasserstein", r.wasserstein},
           {"residuals", r.residuals},
           {"radii", r.radii},
           {"lambda", r.lambda},
           {"sigma", r.sigma},
           {"opnorm", r.opnorm},
           {"warnings", r.warnings},
           {"seconds", seconds}};
    return j;
}

void write_common(const fs::path& dir, const ExperimentConfig& c, const GridSpec& grid, const std::string& command,
                  const std::vector<std::string>& files) {
    fs::create_directories(dir);
    write_json(dir / "config.json", to_json(c));
    json manifest{{"command", command},
                  {"grid", grid_manifest(grid)},
                  {"files", files},
                  {"number_format", "decimal, 17 significant digits"},
                  {"rerun", "wgf " + command + " config.json --sequential"}};
    write_json(dir / "manifest.json", manifest);
}

// Largest per-slice |mass − mass of ρ0| and smallest density over the snapshots.
std::pair<double, double> mass_and_min(const std::vector<std::vector<double>>& snaps, const GridSpec& grid) {
    const double m0 = slice_mass(snaps.front(), grid);
    double dev = 0.0, mn = INFINITY;
    for (const auto& s : snaps) {
        dev = std::max(dev, std::abs(slice_mass(s, grid) - m0));
        for (double v : s) mn = std::min(mn, v);
    }
    return {dev, mn};
}

}  // namespace

GeodesicRun run_geodesic(const ExperimentConfig& c, const IterationObserver& observer) {
    if (c.problem != ProblemKind::Geodesic) throw InvalidInput("config is not a geodesic problem");
    c.validate();
    GeodesicRun run;
    run.grid = c.grid;
    run.rho0 = build_profile(c.initial, c.grid);
    run.rho1 = build_profile(*c.target, c.grid);
    run.mass_gap = std::abs(slice_mass(run.rho0, c.grid) - slice_mass(run.rho1, c.grid));
    const auto radii = c.relaxation.radii(c.grid, 5);
    const double tol = mass_gap_tolerance(c.grid, radii[2], radii[4]);
    if (run.mass_gap > tol) {
        std::ostringstream msg;
        msg << "mass gap between source and target is " << run.mass_gap << ", the relaxation tolerates " << tol
            << "; normalize the densities or enlarge delta";
        throw InvalidInput(msg.str());
    }
    run.result = solve_geodesic(c.grid, run.rho0, run.rho1, c.relaxation, build_solver(c), observer);
    return run;
}

FlowRun run_flow(const ExperimentConfig& c, const StepObserver& on_step) {
    if (c.problem != ProblemKind::Flow) throw InvalidInput("config is not a flow problem");
    c.validate();
    FlowRun run;
    run.grid = c.grid;
    run.rho0 = build_profile(c.initial, c.grid);
    const EnergySpec spec = build_energy(c, c.grid);
    run.result = jko_sequence(c.grid, run.rho0, spec, c.relaxation, build_solver(c), on_step);
    return run;
}

ReferenceKind resolve_reference(const ExperimentConfig& c) {
    if (c.reference != ReferenceKind::Auto) return c.reference;
    if (c.problem == ProblemKind::Geodesic)
        return c.target && single_gaussian(c.initial) && single_gaussian(*c.target) ? ReferenceKind::GaussianGeodesic
                                                                                    : ReferenceKind::None;
    const auto& e = c.energy;
    const bool no_fields = e.potential.empty() && e.interaction.empty();
    if (c.grid.dim == 1 && c.initial.kind == ProfileSpec::Kind::Barenblatt && e.internal == InternalEnergy::Power &&
        e.exponent == c.initial.m && e.diffusion == 1.0 && no_fields && e.variant != EnergyVariant::TargetMeasure)
        return ReferenceKind::Barenblatt;
    if (c.grid.dim == 1 && e.internal == InternalEnergy::None && e.potential.empty() && e.interaction.size() == 1 &&
        e.interaction[0].kind == "power_law" && e.interaction[0].params.at("a") == 2.0 &&
        e.interaction[0].params.at("b") == 0.0)
        return ReferenceKind::AggregationEquilibrium;
    return ReferenceKind::None;
}

std::optional<double> reference_error(const ExperimentConfig& c, const GridSpec& grid,
                                      const std::vector<std::vector<double>>& snapshots,
                                      const std::vector<double>& times) {
    if (snapshots.size() != times.size()) throw InvalidInput("snapshot and time counts differ");
    std::vector<std::vector<double>> exact;
    switch (resolve_reference(c)) {
        case ReferenceKind::GaussianGeodesic: {
            const auto* p0 = single_gaussian(c.initial);
            const auto* p1 = c.target ? single_gaussian(*c.target) : nullptr;
            if (!p0 || !p1) throw InvalidInput("gaussian_geodesic reference needs Gaussian source and target");
            for (double t : times)
                exact.push_back(sample_nodes(
                    [&](std::span<const double> x) { return gaussian_geodesic(*p0, *p1, t, x).rho; }, grid));
            return l1_error(snapshots, exact, grid);
        }
        case ReferenceKind::Barenblatt: {
            const auto& p = c.initial;
            if (p.kind != ProfileSpec::Kind::Barenblatt) throw InvalidInput("barenblatt reference needs a barenblatt start");
            for (double t : times)
                exact.push_back(sample_nodes(
                    [&](std::span<const double> x) { return barenblatt(x[0], p.t + t, p.m, p.C, p.t0, p.alpha); },
                    grid));
            return l1_error(snapshots, exact, grid);
        }
        case ReferenceKind::AggregationEquilibrium: {
            if (grid.dim != 1) throw InvalidInput("aggregation equilibrium reference is one-dimensional");
            exact.push_back(
                sample_nodes([](std::span<const double> x) { return aggregation_equilibrium_1d(x[0]); }, grid));
            return l1_error({snapshots.back()}, exact, grid);
        }
        default: return std::nullopt;
    }
}

void write_geodesic_outputs(const fs::path& dir, const ExperimentConfig& c, const GeodesicRun& run, double seconds) {
    const auto& g = run.grid;
    std::vector<std::string> files{"config.json", "manifest.json", "rho.csv", "momentum_x.csv", "distance.txt",
                                   "log.csv", "report.json"};
    if (g.dim == 2) files.insert(files.begin() + 4, "momentum_y.csv");
    write_common(dir, c, g, "geodesic", files);

    const auto dens = run.result.u.density(g);
    const auto mom = run.result.u.momentum_field(g);
    std::vector<std::vector<double>> rho, mx, my;
    std::vector<double> times;
    for (std::size_t k = 0; k < g.num_slices(); ++k) {
        const auto s = dens.slice(k);
        rho.emplace_back(s.begin(), s.end());
        times.push_back(static_cast<double>(k) * g.dt());
        for (int a = 0; a < g.dim; ++a) {
            auto comp = mom.component(a).subspan(k * g.num_nodes(), g.num_nodes());
            (a == 0 ? mx : my).emplace_back(comp.begin(), comp.end());
        }
    }
    write_snapshots_csv(dir / "rho.csv", g, rho, times);
    write_snapshots_csv(dir / "momentum_x.csv", g, mx, times, {}, "m_x");
    if (g.dim == 2) write_snapshots_csv(dir / "momentum_y.csv", g, my, times, {}, "m_y");
    {
        std::ofstream out(dir / "distance.txt");
        out << format_double(run.result.report.wasserstein) << "\n";
    }
    write_log_csv(dir / "log.csv", run.result.report);
    json rep = report_json(run.result.report, seconds);
    auto [dev, mn] = mass_and_min(rho, g);
    rep["min_rho"] = mn;
    rep["max_slice_mass_deviation"] = dev;
    rep["mass_gap"] = run.mass_gap;
    if (auto e = reference_error(c, g, rho, times)) {
        rep["reference"] = to_string(resolve_reference(c));
        rep["l1_error"] = *e;
        if (resolve_reference(c) == ReferenceKind::GaussianGeodesic)
            rep["exact_wasserstein"] =
                std::sqrt(gaussian_wasserstein_sq(c.initial.gaussians[0], c.target->gaussians[0], g.dim));
    }
    write_json(dir / "report.json", rep);
}

void write_flow_outputs(const fs::path& dir, const ExperimentConfig& c, const FlowRun& run, double seconds) {
    const auto& g = run.grid;
    const auto& res = run.result;
    write_common(dir, c, g, "flow", {"config.json", "manifest.json", "rho.csv", "energy.csv", "log.csv", "report.json"});
    std::vector<std::vector<double>> snaps;
    std::vector<double> times;
    std::vector<int> idx;
    const int last = static_cast<int>(res.snapshots.size()) - 1;
    for (int k = 0; k <= last; ++k) {
        if (k % c.output.snapshot_every != 0 && k != last) continue;
        snaps.push_back(res.snapshots[k]);
        times.push_back(res.times[k]);
        idx.push_back(k);
    }
    write_snapshots_csv(dir / "rho.csv", g, snaps, times, idx);
    {
        std::ofstream out(dir / "energy.csv");
        out << "step,t,energy\n";
        for (std::size_t k = 0; k < res.times.size(); ++k)
            out << k << "," << format_double(res.times[k]) << "," << format_double(res.report.energy_trace[k]) << "\n";
    }
    write_log_csv(dir / "log.csv", res.report);
    json rep = report_json(res.report, seconds);
    json reasons = json::array();
    for (auto r : res.report.step_reasons) reasons.push_back(to_string(r));
    rep["step_iterations"] = res.report.step_iterations;
    rep["step_reasons"] = reasons;
    auto [dev, mn] = mass_and_min(res.snapshots, g);
    rep["min_rho"] = mn;
    rep["max_snapshot_mass_deviation"] = dev;
    if (auto e = reference_error(c, g, res.snapshots, res.times)) {
        rep["reference"] = to_string(resolve_reference(c));
        rep["l1_error"] = *e;
    }
    write_json(dir / "report.json", rep);
}

namespace {

fs::path output_dir(const ExperimentConfig& c, const RunOptions& opts) {
    return opts.output_dir ? *opts.output_dir : fs::path(c.output.directory);
}

struct Member {
    std::string variant;
    double parameter = 0.0;
    ExperimentConfig config;
    // filled by the run
    std::vector<std::vector<double>> snapshots;
    std::vector<double> times;
    std::optional<double> error;
    int iterations = 0;
    std::string status;
    bool converged = false;

    Member(std::string v, double p, ExperimentConfig c) : variant(std::move(v)), parameter(p), config(std::move(c)) {}
};

void run_member(Member& m, const fs::path& dir) {
    const auto t0 = Clock::now();
    try {
        if (m.config.problem == ProblemKind::Geodesic) {
            auto run = run_geodesic(m.config);
            write_geodesic_outputs(dir, m.config, run, seconds_since(t0));
            const auto d = run.result.u.density(run.grid);
            for (std::size_t k = 0; k < run.grid.num_slices(); ++k) {
                auto s = d.slice(k);
                m.snapshots.emplace_back(s.begin(), s.end());
                m.times.push_back(static_cast<double>(k) * run.grid.dt());
            }
            m.iterations = run.result.report.iterations;
            m.converged = run.result.report.stop_reason == StopReason::Converged;
        } else {
            auto run = run_flow(m.config);
            write_flow_outputs(dir, m.config, run, seconds_since(t0));
            m.snapshots = run.result.snapshots;
            m.times = run.result.times;
            m.iterations = run.result.report.iterations;
            m.converged = run.result.report.stop_reason == StopReason::Converged;
        }
        m.error = reference_error(m.config, m.config.grid, m.snapshots, m.times);
        m.status = m.converged ? "converged" : "iter_max";
    } catch (const std::exception& e) {
        m.status = std::string("failed: ") + e.what();
        m.converged = false;
    }
}

void run_members(std::vector<Member>& members, const fs::path& dir, const RunOptions& opts) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < members.size();) {
            auto& m = members[i];
            std::ostringstream name;
            name << "member_" << (i < 10 ? "0" : "") << i;
            say(opts, "[study] " + name.str() + " " + m.variant + " parameter " + format_double(m.parameter));
            run_member(m, dir / name.str());
            say(opts, "[study] " + name.str() + " " + m.status);
        }
    };
    const int n = std::min<int>(thread_count(opts), static_cast<int>(members.size()));
    if (n <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

// log(e_prev/e)/log(h_prev/h) for consecutive rows of one variant, h the resolution parameter.
void fill_orders(std::vector<StudyRow>& rows, const std::function<double(double)>& resolution) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto& a = rows[i - 1];
        auto& b = rows[i];
        if (a.variant != b.variant || !a.error || !b.error || *a.error <= 0.0 || *b.error <= 0.0) continue;
        const double ha = resolution(a.parameter), hb = resolution(b.parameter);
        if (ha == hb) continue;
        b.order = std::log(*a.error / *b.error) / std::log(ha / hb);
    }
}

void write_rates(const fs::path& path, const StudyResult& r) {
    std::ofstream out(path);
    out << "variant,parameter,error,order,iterations,status\n";
    for (const auto& row : r.rows) {
        out << row.variant << "," << format_double(row.parameter) << ","
            << (row.error ? format_double(*row.error) : "") << "," << (row.order ? format_double(*row.order) : "")
            << "," << row.iterations << ",\"" << row.status << "\"\n";
    }
}

StudyResult iteration_rate(const ExperimentConfig& c, const fs::path& dir, const RunOptions& opts) {
    if (c.problem != ProblemKind::Geodesic) throw InvalidInput("IterationRate needs a geodesic config");
    if (c.study.iterations.empty()) throw InvalidInput("IterationRate needs study.iterations");
    if (resolve_reference(c) != ReferenceKind::GaussianGeodesic)
        throw InvalidInput("IterationRate needs an exact geodesic (Gaussian source and target)");
    auto checkpoints = c.study.iterations;
    std::sort(checkpoints.begin(), checkpoints.end());
    ExperimentConfig run_cfg = c;
    run_cfg.solver.iter_max = checkpoints.back();

    const GridSpec& g = c.grid;
    std::vector<double> times;
    for (std::size_t k = 0; k < g.num_slices(); ++k) times.push_back(static_cast<double>(k) * g.dt());
    StudyResult out;
    out.kind = StudyKind::IterationRate;
    std::ofstream curve;
    fs::create_directories(dir);
    curve.open(dir / "curve.csv");
    curve << "iteration,error\n";
    std::size_t next = 0;
    auto observer = [&](int it, const PrimalState& u) {
        if (next >= checkpoints.size() || it != checkpoints[next]) return;
        std::vector<std::vector<double>> snaps;
        for (std::size_t k = 0; k < g.num_slices(); ++k) {
            auto s = u.rho_slice(k);
            snaps.emplace_back(s.begin(), s.end());
        }
        const double e = *reference_error(c, g, snaps, times);
        curve << it << "," << format_double(e) << "\n";
        out.rows.push_back({"", static_cast<double>(it), e, std::nullopt, it, "reached"});
        ++next;
    };
    const auto t0 = Clock::now();
    say(opts, "[study] single solve with checkpoints up to " + std::to_string(checkpoints.back()));
    try {
        auto run = run_geodesic(run_cfg, observer);
        write_geodesic_outputs(dir / "member_00", run_cfg, run, seconds_since(t0));
        if (run.result.report.stop_reason == StopReason::Converged) {
            for (; next < checkpoints.size(); ++next)
                out.rows.push_back({"", static_cast<double>(checkpoints[next]), std::nullopt, std::nullopt,
                                    run.result.report.iterations, "converged before checkpoint"});
        }
    } catch (const std::exception& e) {
        for (; next < checkpoints.size(); ++next)
            out.rows.push_back({"", static_cast<double>(checkpoints[next]), std::nullopt, std::nullopt, 0,
                                std::string("failed: ") + e.what()});
        out.all_converged = false;
    }
    fill_orders(out.rows, [](double n) { return 1.0 / n; });
    return out;
}

}  // namespace

StudyResult run_study(const ExperimentConfig& c, StudyKind kind, const fs::path& dir, const RunOptions& opts) {
    c.validate();
    if (kind == StudyKind::IterationRate) return iteration_rate(c, dir, opts);

    std::vector<Member> members;
    std::function<double(double)> resolution = [](double p) { return p; };
    switch (kind) {
        case StudyKind::TauRefinement: {
            if (c.problem != ProblemKind::Flow) throw InvalidInput("TauRefinement needs a flow config");
            if (c.study.tau.empty()) throw InvalidInput("TauRefinement needs study.tau");
            auto variants = c.study.variants;
            if (variants.empty()) variants.push_back(to_string(c.energy.variant));
            auto taus = c.study.tau;
            std::sort(taus.rbegin(), taus.rend());
            const double t_final = c.final_time();
            for (const auto& v : variants) {
                for (double tau : taus) {
                    Member m(v, tau, c);
                    m.config.energy.variant = energy_variant_from_string(v);
                    m.config.solver.tau = tau;
                    const double steps = t_final / tau;
                    m.config.solver.n_outer = static_cast<int>(std::lround(steps));
                    if (std::abs(steps - m.config.solver.n_outer) > 1e-9 * steps || m.config.solver.n_outer < 1)
                        throw InvalidInput("tau " + format_double(tau) + " does not divide the final time " +
                                           format_double(t_final));
                    members.push_back(std::move(m));
                }
            }
            break;
        }
        case StudyKind::GridRefinement: {
            if (c.study.n_space.empty()) throw InvalidInput("GridRefinement needs study.n_space");
            for (std::size_t i = 0; i < c.study.n_space.size(); ++i) {
                const int n = c.study.n_space[i];
                Member m(to_string(c.energy.variant), static_cast<double>(n), c);
                m.config.grid.n_space = {n, c.grid.dim == 2 ? n : c.grid.n_space[1]};
                if (!c.study.n_time.empty()) m.config.grid.n_time = c.study.n_time[i];
                members.push_back(std::move(m));
            }
            const double len = c.grid.upper[0] - c.grid.lower[0];
            resolution = [len](double n) { return len / n; };
            break;
        }
        case StudyKind::DeltaScaling: {
            if (c.study.delta_exponents.empty()) throw InvalidInput("DeltaScaling needs study.delta_exponents");
            for (double p : c.study.delta_exponents) {
                Member m("", p, c);
                m.config.relaxation = RelaxationPolicy::explicit_radii({std::pow(c.grid.max_dx(), p)});
                members.push_back(std::move(m));
            }
            break;
        }
        case StudyKind::IterationRate: break;
    }

    run_members(members, dir, opts);

    StudyResult out;
    out.kind = kind;
    const bool self = kind == StudyKind::TauRefinement &&
                      (resolve_reference(c) == ReferenceKind::None || c.reference == ReferenceKind::SelfConvergence);
    for (std::size_t i = 0; i < members.size(); ++i) {
        auto& m = members[i];
        StudyRow row{m.variant, m.parameter, m.error, std::nullopt, m.iterations, m.status};
        if (self) {
            row.error.reset();
            // error of run i measured against the next finer run of the same variant
            if (i + 1 < members.size() && members[i + 1].variant == m.variant && !m.snapshots.empty() &&
                !members[i + 1].snapshots.empty())
                row.error = self_convergence_error(m.snapshots, m.times, members[i + 1].snapshots,
                                                   members[i + 1].times, c.grid);
        }
        out.all_converged = out.all_converged && m.converged;
        out.rows.push_back(std::move(row));
    }
    if (kind != StudyKind::DeltaScaling) fill_orders(out.rows, resolution);
    return out;
}

int cmd_geodesic(const ExperimentConfig& c, const RunOptions& opts) {
    try {
        const auto dir = output_dir(c, opts);
        const auto t0 = Clock::now();
        auto run = run_geodesic(c);
        write_geodesic_outputs(dir, c, run, seconds_since(t0));
        const auto& r = run.result.report;
        for (const auto& w : r.warnings) say(opts, "warning: " + w);
        std::ostringstream msg;
        msg << "geodesic " << to_string(r.stop_reason) << " after " << r.iterations << " iterations, distance "
            << format_double(r.wasserstein) << ", output in " << dir.string();
        say(opts, msg.str());
        return exit_code(r.stop_reason);
    } catch (const std::exception& e) {
        say(opts, std::string("error: ") + e.what(), true);
        return kExitInvalid;
    }
}

int cmd_flow(const ExperimentConfig& c, const RunOptions& opts) {
    try {
        const auto dir = output_dir(c, opts);
        const auto t0 = Clock::now();
        auto run = run_flow(c, [&](int step, const JkoStepResult& res) {
            std::ostringstream msg;
            msg << "step " << step << "/" << c.solver.n_outer << ": " << to_string(res.report.stop_reason) << " in "
                << res.report.iterations << " iterations";
            say(opts, msg.str());
        });
        write_flow_outputs(dir, c, run, seconds_since(t0));
        const auto& r = run.result.report;
        for (const auto& w : r.warnings) say(opts, "warning: " + w);
        std::ostringstream msg;
        msg << "flow " << to_string(r.stop_reason) << " (" << r.iterations << " iterations over "
            << c.solver.n_outer << " steps), output in " << dir.string();
        say(opts, msg.str());
        return exit_code(r.stop_reason);
    } catch (const std::exception& e) {
        say(opts, std::string("error: ") + e.what(), true);
        return kExitInvalid;
    }
}

int cmd_study(const ExperimentConfig& c, StudyKind kind, const RunOptions& opts) {
    try {
        const auto dir = output_dir(c, opts);
        fs::create_directories(dir);
        write_json(dir / "config.json", to_json(c));
        auto res = run_study(c, kind, dir, opts);
        write_rates(dir / "rates.csv", res);
        std::ostringstream table;
        table << to_string(kind) << "\n  variant        parameter     error         order   iterations  status\n";
        for (const auto& r : res.rows) {
            char line[256];
            std::snprintf(line, sizeof line, "  %-14s %-13.6g %-13s %-7s %-11d %s\n", r.variant.c_str(), r.parameter,
                          r.error ? format_double(*r.error).substr(0, 12).c_str() : "-",
                          r.order ? std::to_string(*r.order).substr(0, 6).c_str() : "-", r.iterations,
                          r.status.c_str());
            table << line;
        }
        say(opts, table.str());
        bool failed = false;
        for (const auto& r : res.rows) failed = failed || r.status.rfind("failed", 0) == 0;
        return failed || !res.all_converged ? kExitIterMax : kExitConverged;
    } catch (const std::exception& e) {
        say(opts, std::string("error: ") + e.what(), true);
        return kExitInvalid;
    }
}

int run_command(const std::string& command, const fs::path& config_path, const std::optional<std::string>& study_kind,
                const RunOptions& opts) {
    ExperimentConfig c;
    std::optional<StudyKind> kind;
    try {
        c = load_config(config_path);
        if (command == "study") {
            if (!study_kind) throw InvalidInput("study needs --kind");
            kind = study_from_string(*study_kind);
        } else if (command != "geodesic" && command != "flow") {
            throw InvalidInput("unknown command '" + command + "'");
        }
        if (command == "geodesic" && c.problem != ProblemKind::Geodesic)
            throw InvalidInput("config describes a flow; use `wgf flow`");
        if (command == "flow" && c.problem != ProblemKind::Flow)
            throw InvalidInput("config describes a geodesic; use `wgf geodesic`");
    } catch (const std::exception& e) {
        say(opts, std::string("error: ") + e.what(), true);
        return kExitInvalid;
    }
    if (command == "geodesic") return cmd_geodesic(c, opts);
    if (command == "flow") return cmd_flow(c, opts);
    return cmd_study(c, *kind, opts);
}

}  // namespace wgf::cli
