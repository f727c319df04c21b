#include "wgf/cli/config.hpp"

#include "wgf/cli/io.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace wgf::cli {

namespace fs = std::filesystem;

std::string to_string(ProblemKind p) { return p == ProblemKind::Geodesic ? "geodesic" : "flow"; }

ProblemKind problem_from_string(const std::string& s) {
    if (s == "geodesic") return ProblemKind::Geodesic;
    if (s == "flow") return ProblemKind::Flow;
    throw InvalidInput("unknown problem '" + s + "'");
}

std::string to_string(ProfileSpec::Kind k) {
    switch (k) {
        case ProfileSpec::Kind::Gaussian: return "gaussian";
        case ProfileSpec::Kind::GaussianSum: return "gaussian_sum";
        case ProfileSpec::Kind::Barenblatt: return "barenblatt";
        case ProfileSpec::Kind::Uniform: return "uniform";
        case ProfileSpec::Kind::Disk: return "disk";
        case ProfileSpec::Kind::Raster: return "raster";
        case ProfileSpec::Kind::Table: return "table";
    }
    return "gaussian";
}

ProfileSpec::Kind profile_kind_from_string(const std::string& s) {
    for (auto k : {ProfileSpec::Kind::Gaussian, ProfileSpec::Kind::GaussianSum, ProfileSpec::Kind::Barenblatt,
                   ProfileSpec::Kind::Uniform, ProfileSpec::Kind::Disk, ProfileSpec::Kind::Raster,
                   ProfileSpec::Kind::Table})
        if (to_string(k) == s) return k;
    throw InvalidInput("unknown profile kind '" + s + "'");
}

std::string to_string(ReferenceKind r) {
    switch (r) {
        case ReferenceKind::Auto: return "auto";
        case ReferenceKind::None: return "none";
        case ReferenceKind::GaussianGeodesic: return "gaussian_geodesic";
        case ReferenceKind::Barenblatt: return "barenblatt";
        case ReferenceKind::AggregationEquilibrium: return "aggregation_equilibrium";
        case ReferenceKind::SelfConvergence: return "self_convergence";
    }
    return "auto";
}

ReferenceKind reference_from_string(const std::string& s) {
    for (auto r : {ReferenceKind::Auto, ReferenceKind::None, ReferenceKind::GaussianGeodesic,
                   ReferenceKind::Barenblatt, ReferenceKind::AggregationEquilibrium,
                   ReferenceKind::SelfConvergence})
        if (to_string(r) == s) return r;
    throw InvalidInput("unknown reference '" + s + "'");
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("config key '") + key + "': " + e.what());
    }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw InvalidInput(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw InvalidInput("unknown key '" + it.key() + "' in " + where);
    }
}

std::array<double, 2> pair_of(const json& j, const char* key, std::array<double, 2> fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (it->is_number()) return {it->get<double>(), it->get<double>()};
    auto v = it->get<std::vector<double>>();
    if (v.empty() || v.size() > 2) throw InvalidInput(std::string("'") + key + "' needs 1 or 2 entries");
    return {v[0], v.size() > 1 ? v[1] : v[0]};
}

json gaussian_json(const GaussianParams& g) {
    return {{"mu", {g.mu[0], g.mu[1]}}, {"theta", g.theta}, {"mass", g.mass}};
}

GaussianParams gaussian_from(const json& j) {
    GaussianParams g;
    g.mu = pair_of(j, "mu", {0.0, 0.0});
    if (j.contains("mu") && j["mu"].is_array() && j["mu"].size() == 1) g.mu[1] = 0.0;
    g.theta = get_or(j, "theta", 1.0);
    g.mass = get_or(j, "mass", 1.0);
    return g;
}

json profile_json(const ProfileSpec& p) {
    json j{{"kind", to_string(p.kind)}};
    switch (p.kind) {
        case ProfileSpec::Kind::Gaussian: {
            json g = gaussian_json(p.gaussians.at(0));
            for (auto& [k, v] : g.items()) j[k] = v;
            break;
        }
        case ProfileSpec::Kind::GaussianSum:
            j["components"] = json::array();
            for (const auto& g : p.gaussians) j["components"].push_back(gaussian_json(g));
            break;
        case ProfileSpec::Kind::Barenblatt:
            j.update({{"m", p.m}, {"C", p.C}, {"t0", p.t0}, {"alpha", p.alpha}, {"t", p.t}});
            break;
        case ProfileSpec::Kind::Uniform: j["mass"] = p.mass; break;
        case ProfileSpec::Kind::Disk:
            j.update({{"center", {p.center[0], p.center[1]}}, {"radius", p.radius}, {"mass", p.mass}});
            break;
        case ProfileSpec::Kind::Raster: j.update({{"path", p.path}, {"mass", p.mass}}); break;
        case ProfileSpec::Kind::Table: j["path"] = p.path; break;
    }
    return j;
}

ProfileSpec profile_from(const json& j, const std::string& where) {
    if (!j.is_object()) throw InvalidInput(where + " must be an object");
    ProfileSpec p;
    p.kind = profile_kind_from_string(get_or<std::string>(j, "kind", "gaussian"));
    switch (p.kind) {
        case ProfileSpec::Kind::Gaussian:
            check_keys(j, {"kind", "mu", "theta", "mass"}, where);
            p.gaussians = {gaussian_from(j)};
            break;
        case ProfileSpec::Kind::GaussianSum:
            check_keys(j, {"kind", "components"}, where);
            for (const auto& c : j.at("components")) p.gaussians.push_back(gaussian_from(c));
            if (p.gaussians.empty()) throw InvalidInput(where + ": gaussian_sum needs components");
            break;
        case ProfileSpec::Kind::Barenblatt:
            check_keys(j, {"kind", "m", "C", "t0", "alpha", "t"}, where);
            p.m = get_or(j, "m", p.m);
            p.C = get_or(j, "C", p.C);
            p.t0 = get_or(j, "t0", p.t0);
            p.alpha = get_or(j, "alpha", p.alpha);
            p.t = get_or(j, "t", p.t);
            break;
        case ProfileSpec::Kind::Uniform:
            check_keys(j, {"kind", "mass"}, where);
            p.mass = get_or(j, "mass", p.mass);
            break;
        case ProfileSpec::Kind::Disk:
            check_keys(j, {"kind", "center", "radius", "mass"}, where);
            p.center = pair_of(j, "center", p.center);
            p.radius = get_or(j, "radius", p.radius);
            p.mass = get_or(j, "mass", p.mass);
            break;
        case ProfileSpec::Kind::Raster:
            check_keys(j, {"kind", "path", "mass"}, where);
            p.path = get_or<std::string>(j, "path", "");
            p.mass = get_or(j, "mass", p.mass);
            break;
        case ProfileSpec::Kind::Table:
            check_keys(j, {"kind", "path"}, where);
            p.path = get_or<std::string>(j, "path", "");
            break;
    }
    return p;
}

json term_json(const TermSpec& t) {
    json j{{"kind", t.kind}};
    for (const auto& [k, v] : t.params) j[k] = v;
    if (!t.path.empty()) j["path"] = t.path;
    return j;
}

const std::map<std::string, std::vector<std::string>>& term_params() {
    static const std::map<std::string, std::vector<std::string>> m{
        {"quadratic", {"c"}},           {"log", {"c"}},         {"power_law", {"a", "b"}},
        {"gaussian", {"amplitude", "width"}}, {"newtonian", {"chi"}}, {"table", {}}};
    return m;
}

TermSpec term_from(const json& j, const std::string& where) {
    if (!j.is_object()) throw InvalidInput(where + " must be an object");
    TermSpec t;
    t.kind = get_or<std::string>(j, "kind", "");
    auto known = term_params().find(t.kind);
    if (known == term_params().end()) throw InvalidInput(where + ": unknown term kind '" + t.kind + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "kind") continue;
        if (it.key() == "path" && t.kind == "table") {
            t.path = it->get<std::string>();
            continue;
        }
        const auto& names = known->second;
        if (std::find(names.begin(), names.end(), it.key()) == names.end())
            throw InvalidInput(where + ": '" + t.kind + "' has no parameter '" + it.key() + "'");
        t.params[it.key()] = it->get<double>();
    }
    for (const auto& name : known->second)
        if (!t.params.count(name)) t.params[name] = (name == "c" || name == "chi" || name == "amplitude" || name == "width") ? 1.0 : 0.0;
    if (t.kind == "table" && t.path.empty()) throw InvalidInput(where + ": table term needs a path");
    return t;
}

fs::path resolve(const std::string& p, const fs::path& base) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void rebase(ProfileSpec& p, const fs::path& base) {
    if (!p.path.empty()) p.path = resolve(p.path, base).lexically_normal().string();
}

}  // namespace

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    const auto& s = a.solver;
    const auto& t = b.solver;
    const bool solver_eq = s.lambda == t.lambda && s.sigma == t.sigma && s.step_product == t.step_product &&
                           s.iter_max == t.iter_max && s.eps1 == t.eps1 && s.eps2 == t.eps2 && s.tau == t.tau &&
                           s.n_outer == t.n_outer && s.opnorm_tol == t.opnorm_tol &&
                           s.opnorm_max_iter == t.opnorm_max_iter && s.constraint_slack == t.constraint_slack &&
                           s.time_quadrature == t.time_quadrature;
    const auto& r = a.relaxation;
    const auto& q = b.relaxation;
    const bool relax_eq = r.mode == q.mode && r.values == q.values && r.c1 == q.c1 && r.c2 == q.c2;
    return a.problem == b.problem && a.grid == b.grid && relax_eq && solver_eq && a.energy == b.energy &&
           a.initial == b.initial && a.target == b.target && a.output == b.output && a.reference == b.reference &&
           a.study == b.study && a.notes == b.notes;
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["problem"] = to_string(c.problem);
    const int d = c.grid.dim;
    auto per_axis = [d](auto arr) {
        json a = json::array();
        for (int i = 0; i < d; ++i) a.push_back(arr[i]);
        return a;
    };
    j["grid"] = {{"dim", d},
                 {"lower", per_axis(c.grid.lower)},
                 {"upper", per_axis(c.grid.upper)},
                 {"n_space", per_axis(c.grid.n_space)},
                 {"n_time", c.grid.n_time},
                 {"scheme", to_string(c.grid.scheme)}};
    if (c.relaxation.mode == RelaxationPolicy::Mode::Explicit)
        j["relaxation"] = {{"mode", "explicit"}, {"values", c.relaxation.values}};
    else
        j["relaxation"] = {{"mode", "scaled_to_grid"}, {"c1", c.relaxation.c1}, {"c2", c.relaxation.c2}};
    const auto& s = c.solver;
    json sj{{"step_product", s.step_product}, {"iter_max", s.iter_max},     {"eps1", s.eps1},
            {"eps2", s.eps2},                 {"tau", s.tau},               {"n_outer", s.n_outer},
            {"opnorm_tol", s.opnorm_tol},     {"opnorm_max_iter", s.opnorm_max_iter},
            {"constraint_slack", s.constraint_slack},
            {"time_quadrature", to_string(s.time_quadrature)}};
    if (s.lambda) sj["lambda"] = *s.lambda;
    if (s.sigma) sj["sigma"] = *s.sigma;
    j["solver"] = sj;
    const auto& e = c.energy;
    json ej{{"internal", to_string(e.internal)},
            {"exponent", e.exponent},
            {"diffusion", e.diffusion},
            {"variant", to_string(e.variant)},
            {"potential", json::array()},
            {"interaction", json::array()},
            {"regularize_origin", e.regularize_origin},
            {"artificial_diffusion", e.artificial_diffusion},
            {"artificial_diffusion_factor", e.artificial_diffusion_factor},
            {"target_radius", e.target_radius},
            {"entropy_floor", e.entropy_floor}};
    for (const auto& t : e.potential) ej["potential"].push_back(term_json(t));
    for (const auto& t : e.interaction) ej["interaction"].push_back(term_json(t));
    j["energy"] = ej;
    j["initial"] = profile_json(c.initial);
    if (c.target) j["target"] = profile_json(*c.target);
    j["output"] = {{"directory", c.output.directory},
                   {"snapshot_every", c.output.snapshot_every},
                   {"log_interval", c.output.log_interval}};
    j["reference"] = to_string(c.reference);
    j["study"] = {{"iterations", c.study.iterations},
                  {"tau", c.study.tau},
                  {"variants", c.study.variants},
                  {"n_space", c.study.n_space},
                  {"n_time", c.study.n_time},
                  {"delta_exponents", c.study.delta_exponents}};
    if (!c.notes.empty()) j["notes"] = c.notes;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, {"problem", "grid", "relaxation", "solver", "energy", "initial", "target", "output", "reference",
                   "study", "notes"},
               "config");
    ExperimentConfig c;
    c.problem = problem_from_string(get_or<std::string>(j, "problem", "geodesic"));

    const json& g = j.at("grid");
    check_keys(g, {"dim", "lower", "upper", "n_space", "n_time", "scheme"}, "grid");
    c.grid.dim = get_or(g, "dim", 1);
    c.grid.lower = pair_of(g, "lower", c.grid.lower);
    c.grid.upper = pair_of(g, "upper", c.grid.upper);
    if (auto it = g.find("n_space"); it != g.end()) {
        if (it->is_number()) {
            c.grid.n_space = {it->get<int>(), it->get<int>()};
        } else {
            auto v = it->get<std::vector<int>>();
            if (v.empty() || v.size() > 2) throw InvalidInput("'n_space' needs 1 or 2 entries");
            c.grid.n_space = {v[0], v.size() > 1 ? v[1] : v[0]};
        }
    }
    if (c.grid.dim == 1) {
        c.grid.lower[1] = 0.0;
        c.grid.upper[1] = 1.0;
        c.grid.n_space[1] = 2;
    }
    c.grid.n_time = get_or(g, "n_time", c.grid.n_time);
    c.grid.scheme = scheme_from_string(get_or<std::string>(g, "scheme", "crank_nicolson"));

    if (auto it = j.find("relaxation"); it != j.end()) {
        check_keys(*it, {"mode", "values", "c1", "c2"}, "relaxation");
        const auto mode = get_or<std::string>(*it, "mode", "scaled_to_grid");
        if (mode == "explicit") {
            c.relaxation = RelaxationPolicy::explicit_radii(it->at("values").get<std::vector<double>>());
        } else if (mode == "scaled_to_grid") {
            c.relaxation = RelaxationPolicy::scaled(get_or(*it, "c1", 1.0), get_or(*it, "c2", 1.0));
        } else {
            throw InvalidInput("unknown relaxation mode '" + mode + "'");
        }
    }

    if (auto it = j.find("solver"); it != j.end()) {
        const json& s = *it;
        check_keys(s, {"lambda", "sigma", "step_product", "iter_max", "eps1", "eps2", "tau", "n_outer",
                       "opnorm_tol", "opnorm_max_iter", "constraint_slack", "time_quadrature"},
                   "solver");
        auto& o = c.solver;
        if (s.contains("lambda")) o.lambda = s["lambda"].get<double>();
        if (s.contains("sigma")) o.sigma = s["sigma"].get<double>();
        o.step_product = get_or(s, "step_product", o.step_product);
        o.iter_max = get_or(s, "iter_max", o.iter_max);
        o.eps1 = get_or(s, "eps1", o.eps1);
        o.eps2 = get_or(s, "eps2", o.eps2);
        o.tau = get_or(s, "tau", o.tau);
        o.n_outer = get_or(s, "n_outer", o.n_outer);
        o.opnorm_tol = get_or(s, "opnorm_tol", o.opnorm_tol);
        o.opnorm_max_iter = get_or(s, "opnorm_max_iter", o.opnorm_max_iter);
        o.constraint_slack = get_or(s, "constraint_slack", o.constraint_slack);
        o.time_quadrature = time_quadrature_from_string(get_or<std::string>(s, "time_quadrature", "auto"));
    }

    if (auto it = j.find("energy"); it != j.end()) {
        const json& e = *it;
        check_keys(e, {"internal", "exponent", "diffusion", "variant", "potential", "interaction",
                       "regularize_origin", "artificial_diffusion", "artificial_diffusion_factor", "target_radius",
                       "entropy_floor"},
                   "energy");
        auto& o = c.energy;
        o.internal = internal_energy_from_string(get_or<std::string>(e, "internal", "none"));
        o.exponent = get_or(e, "exponent", o.exponent);
        o.diffusion = get_or(e, "diffusion", o.diffusion);
        o.variant = energy_variant_from_string(get_or<std::string>(e, "variant", "classical"));
        auto terms = [&](const char* key, std::vector<TermSpec>& out) {
            auto t = e.find(key);
            if (t == e.end()) return;
            if (t->is_object()) {
                out.push_back(term_from(*t, std::string("energy.") + key));
                return;
            }
            for (const auto& x : *t) out.push_back(term_from(x, std::string("energy.") + key));
        };
        terms("potential", o.potential);
        terms("interaction", o.interaction);
        o.regularize_origin = get_or(e, "regularize_origin", o.regularize_origin);
        o.artificial_diffusion = get_or(e, "artificial_diffusion", o.artificial_diffusion);
        o.artificial_diffusion_factor = get_or(e, "artificial_diffusion_factor", o.artificial_diffusion_factor);
        o.target_radius = get_or(e, "target_radius", o.target_radius);
        o.entropy_floor = get_or(e, "entropy_floor", o.entropy_floor);
    }

    c.initial = profile_from(j.at("initial"), "initial");
    if (auto it = j.find("target"); it != j.end() && !it->is_null()) c.target = profile_from(*it, "target");

    if (auto it = j.find("output"); it != j.end()) {
        check_keys(*it, {"directory", "snapshot_every", "log_interval"}, "output");
        c.output.directory = get_or<std::string>(*it, "directory", c.output.directory);
        c.output.snapshot_every = get_or(*it, "snapshot_every", c.output.snapshot_every);
        c.output.log_interval = get_or(*it, "log_interval", c.output.log_interval);
    }
    c.reference = reference_from_string(get_or<std::string>(j, "reference", "auto"));
    if (auto it = j.find("study"); it != j.end()) {
        check_keys(*it, {"iterations", "tau", "variants", "n_space", "n_time", "delta_exponents"}, "study");
        c.study.iterations = get_or(*it, "iterations", std::vector<int>{});
        c.study.tau = get_or(*it, "tau", std::vector<double>{});
        c.study.variants = get_or(*it, "variants", std::vector<std::string>{});
        c.study.n_space = get_or(*it, "n_space", std::vector<int>{});
        c.study.n_time = get_or(*it, "n_time", std::vector<int>{});
        c.study.delta_exponents = get_or(*it, "delta_exponents", std::vector<double>{});
    }
    c.notes = get_or<std::string>(j, "notes", "");
    return c;
}

void ExperimentConfig::validate(const fs::path& base_dir) const {
    grid.validate();
    solver.validate();
    relaxation.radii(grid, 5);
    if (output.snapshot_every < 1) throw InvalidInput("output.snapshot_every must be at least 1");
    if (output.log_interval < 1) throw InvalidInput("output.log_interval must be at least 1");
    if (output.directory.empty()) throw InvalidInput("output.directory must not be empty");

    auto check_profile = [&](const ProfileSpec& p, const char* name) {
        if ((p.kind == ProfileSpec::Kind::Raster || p.kind == ProfileSpec::Kind::Table)) {
            if (p.path.empty()) throw InvalidInput(std::string(name) + ": missing path");
            if (!fs::exists(resolve(p.path, base_dir)))
                throw InvalidInput(std::string(name) + ": file not found: " + p.path);
        }
        for (const auto& g : p.gaussians) g.validate();
        if (p.kind == ProfileSpec::Kind::Barenblatt && (!(p.m > 1.0) || !(p.t + p.t0 > 0.0)))
            throw InvalidInput(std::string(name) + ": barenblatt needs m > 1 and t + t0 > 0");
        if ((p.kind == ProfileSpec::Kind::Uniform || p.kind == ProfileSpec::Kind::Disk ||
             p.kind == ProfileSpec::Kind::Raster) &&
            !(p.mass > 0.0))
            throw InvalidInput(std::string(name) + ": mass must be positive");
        if (p.kind == ProfileSpec::Kind::Disk && !(p.radius > 0.0))
            throw InvalidInput(std::string(name) + ": radius must be positive");
    };
    check_profile(initial, "initial");
    if (target) check_profile(*target, "target");
    for (const auto* list : {&energy.potential, &energy.interaction})
        for (const auto& t : *list)
            if (t.kind == "table" && !fs::exists(resolve(t.path, base_dir)))
                throw InvalidInput("energy term table not found: " + t.path);

    if (problem == ProblemKind::Geodesic) {
        if (!target) throw InvalidInput("geodesic problems need a target density");
    } else {
        if (energy.variant == EnergyVariant::TargetMeasure && !target)
            throw InvalidInput("the target_measure variant needs a target density");
        if (energy.internal == InternalEnergy::Power && !(energy.exponent > 1.0))
            throw InvalidInput("power internal energy needs exponent > 1");
        if (!(energy.diffusion >= 0.0)) throw InvalidInput("diffusion must be nonnegative");
        if (!(energy.artificial_diffusion >= 0.0) || !(energy.artificial_diffusion_factor >= 0.0))
            throw InvalidInput("artificial diffusion must be nonnegative");
        for (const auto& t : energy.interaction)
            if (t.kind == "newtonian" && grid.dim != 2)
                throw InvalidInput("the newtonian kernel is two-dimensional");
    }
    for (int n : study.iterations)
        if (n < 1) throw InvalidInput("study.iterations must be positive");
    for (double t : study.tau)
        if (!(t > 0.0)) throw InvalidInput("study.tau must be positive");
    for (const auto& v : study.variants) energy_variant_from_string(v);
    for (int n : study.n_space)
        if (n < 2) throw InvalidInput("study.n_space must be at least 2");
    if (!study.n_time.empty() && study.n_time.size() != study.n_space.size())
        throw InvalidInput("study.n_time must be empty or match study.n_space");
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw InvalidInput("config " + path.string() + ": " + e.what());
    }
    ExperimentConfig c;
    try {
        c = config_from_json(j);
    } catch (const json::exception& e) {
        throw InvalidInput("config " + path.string() + ": " + e.what());
    }
    const fs::path base = path.parent_path();
    rebase(c.initial, base);
    if (c.target) rebase(*c.target, base);
    for (auto* list : {&c.energy.potential, &c.energy.interaction})
        for (auto& t : *list)
            if (!t.path.empty()) t.path = resolve(t.path, base).lexically_normal().string();
    c.validate();
    return c;
}

std::vector<double> build_profile(const ProfileSpec& p, const GridSpec& grid) {
    const int d = grid.dim;
    std::vector<double> rho;
    switch (p.kind) {
        case ProfileSpec::Kind::Gaussian:
        case ProfileSpec::Kind::GaussianSum:
            rho.assign(grid.num_nodes(), 0.0);
            for (const auto& g : p.gaussians) {
                auto part = sample_nodes([&](std::span<const double> x) { return gaussian_density(g, x); }, grid);
                for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += part[i];
            }
            break;
        case ProfileSpec::Kind::Barenblatt:
            if (d != 1) throw InvalidInput("the barenblatt profile is one-dimensional");
            rho = sample_nodes([&](std::span<const double> x) { return barenblatt(x[0], p.t, p.m, p.C, p.t0, p.alpha); },
                               grid);
            break;
        case ProfileSpec::Kind::Uniform:
            rho.assign(grid.num_nodes(), 1.0);
            break;
        case ProfileSpec::Kind::Disk:
            rho = sample_nodes(
                [&](std::span<const double> x) {
                    double r2 = 0.0;
                    for (int a = 0; a < d; ++a) r2 += (x[a] - p.center[a]) * (x[a] - p.center[a]);
                    return r2 <= p.radius * p.radius ? 1.0 : 0.0;
                },
                grid);
            break;
        case ProfileSpec::Kind::Raster:
            return ingest_raster(p.path, grid, p.mass);
        case ProfileSpec::Kind::Table: {
            rho = read_table(p.path);
            if (rho.size() != grid.num_nodes())
                throw InvalidInput("table " + p.path + " has " + std::to_string(rho.size()) + " values, grid has " +
                                   std::to_string(grid.num_nodes()) + " nodes");
            break;
        }
    }
    if (p.kind == ProfileSpec::Kind::Uniform || p.kind == ProfileSpec::Kind::Disk) {
        const double m = slice_mass(rho, grid);
        if (!(m > 0.0)) throw InvalidInput("profile has no mass on this grid");
        for (double& v : rho) v *= p.mass / m;
    }
    return rho;
}

namespace {

KernelFunction make_term(const TermSpec& t, bool as_potential) {
    auto p = [&](const char* k) { return t.params.at(k); };
    if (t.kind == "quadratic") return as_potential ? kernels::quadratic_drift(p("c")) : kernels::quadratic_attraction(p("c"));
    if (t.kind == "log") return as_potential ? kernels::log_drift(p("c")) : kernels::log_repulsion(p("c"));
    if (t.kind == "power_law") return kernels::power_law(p("a"), p("b"));
    if (t.kind == "gaussian") return kernels::gaussian_kernel(p("amplitude"), p("width"));
    if (t.kind == "newtonian") return kernels::newtonian_2d(p("chi"));
    if (t.kind == "table" && !as_potential) {
        auto v = read_table(t.path);
        if (v.size() % 2 != 0 || v.size() < 4) throw InvalidInput("radial kernel table needs pairs r, W");
        std::vector<double> r, w;
        for (std::size_t i = 0; i < v.size(); i += 2) {
            r.push_back(v[i]);
            w.push_back(v[i + 1]);
        }
        return kernels::tabulated_radial(std::move(r), std::move(w));
    }
    throw InvalidInput("unsupported term kind '" + t.kind + "'");
}

}  // namespace

EnergySpec build_energy(const ExperimentConfig& c, const GridSpec& grid) {
    const auto& e = c.energy;
    EnergySpec s;
    s.internal = e.internal;
    s.exponent = e.exponent;
    s.diffusion = e.diffusion;
    s.variant = e.variant;
    s.target_radius = e.target_radius;
    s.entropy_floor = e.entropy_floor;
    double h2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) h2 += grid.dx(a) * grid.dx(a);
    s.artificial_diffusion = e.artificial_diffusion + e.artificial_diffusion_factor * h2;

    if (!e.potential.empty()) {
        s.potential.assign(grid.num_nodes(), 0.0);
        for (const auto& t : e.potential) {
            std::vector<double> v;
            if (t.kind == "table") {
                v = read_table(t.path);
                if (v.size() != grid.num_nodes()) throw InvalidInput("potential table size differs from node count");
            } else {
                const auto f = make_term(t, true);
                v = sample_nodes(f, grid);
                for (std::size_t node = 0; node < v.size(); ++node) {
                    if (std::isfinite(v[node]) || !e.regularize_origin) continue;
                    const auto x0 = grid.node_position(node);
                    const KernelFunction shifted = [&](std::span<const double> y) {
                        std::array<double, 2> x{x0[0] + y[0], grid.dim == 2 ? x0[1] + y[1] : 0.0};
                        return f(std::span<const double>(x.data(), y.size()));
                    };
                    std::array<double, 2> h{grid.dx(0), grid.dim == 2 ? grid.dx(1) : 0.0};
                    v[node] = regularize_kernel_origin(shifted, std::span<const double>(h.data(), grid.dim));
                }
            }
            for (std::size_t i = 0; i < v.size(); ++i) s.potential[i] += v[i];
        }
        for (double v : s.potential)
            if (!std::isfinite(v)) throw InvalidInput("potential is not finite on the grid (singular at a node?)");
    }
    if (!e.interaction.empty()) {
        std::vector<KernelFunction> parts;
        for (const auto& t : e.interaction) parts.push_back(make_term(t, false));
        KernelFunction w = [parts](std::span<const double> x) {
            double sum = 0.0;
            for (const auto& f : parts) sum += f(x);
            return sum;
        };
        s.interaction = make_convolution(w, grid, e.regularize_origin);
    }
    if (e.variant == EnergyVariant::TargetMeasure && c.target) s.target = build_profile(*c.target, grid);
    s.validate(grid);
    return s;
}

SolverConfig build_solver(const ExperimentConfig& c) {
    SolverConfig s = c.solver;
    s.log_interval = c.output.log_interval;
    return s;
}

}  // namespace wgf::cli
