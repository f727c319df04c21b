#pragma once

#include "wgf/constraints.hpp"
#include "wgf/energy.hpp"
#include "wgf/exact.hpp"
#include "wgf/grid.hpp"
#include "wgf/solver.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wgf::cli {

using nlohmann::json;

enum class ProblemKind { Geodesic, Flow };
std::string to_string(ProblemKind p);
ProblemKind problem_from_string(const std::string& s);

/// Where an initial or target density comes from.
struct ProfileSpec {
    enum class Kind { Gaussian, GaussianSum, Barenblatt, Uniform, Disk, Raster, Table };
    Kind kind = Kind::Gaussian;
    std::vector<GaussianParams> gaussians;  // Gaussian (one entry) and GaussianSum
    // Barenblatt at time t (the profile's own clock, shifted by t0).
    double m = 2.0, C = 1.0, t0 = 1e-3, alpha = 1.0, t = 0.0;
    // Uniform, Disk, Raster: total mass after normalization.
    double mass = 1.0;
    std::array<double, 2> center{0.0, 0.0};
    double radius = 1.0;
    std::string path;  // Raster (PGM) or Table (node values)

    bool operator==(const ProfileSpec&) const = default;
};

std::string to_string(ProfileSpec::Kind k);
ProfileSpec::Kind profile_kind_from_string(const std::string& s);

/// One additive term of a potential V or an interaction kernel W.
///
/// Kinds and parameters:
///   quadratic {c}            c|x|²/2
///   log {c}                  −c ln|x|
///   power_law {a, b}         |x|^a/a − |x|^b/b
///   gaussian {amplitude, width}
///   newtonian {chi}          (χ/2π) ln|x|, two dimensions
///   table {path}             node values (potential) or radial samples r,W (kernel)
struct TermSpec {
    std::string kind;
    std::map<std::string, double> params;
    std::string path;

    bool operator==(const TermSpec&) const = default;
};

struct EnergyConfig {
    InternalEnergy internal = InternalEnergy::None;
    double exponent = 2.0;
    double diffusion = 1.0;
    EnergyVariant variant = EnergyVariant::Classical;
    std::vector<TermSpec> potential;
    std::vector<TermSpec> interaction;
    bool regularize_origin = true;
    /// ε = artificial_diffusion + artificial_diffusion_factor·Σ_l (Δx_l)²
    double artificial_diffusion = 0.0;
    double artificial_diffusion_factor = 0.0;
    double target_radius = 0.0;
    double entropy_floor = 1e-300;

    bool operator==(const EnergyConfig&) const = default;
};

struct OutputConfig {
    std::string directory = "run";
    int snapshot_every = 1;  // outer steps between flow snapshots
    int log_interval = 100;

    bool operator==(const OutputConfig&) const = default;
};

/// Which exact solution, if any, the studies compare against.
enum class ReferenceKind { Auto, None, GaussianGeodesic, Barenblatt, AggregationEquilibrium, SelfConvergence };
std::string to_string(ReferenceKind r);
ReferenceKind reference_from_string(const std::string& s);

/// Parameter lists for `wgf study`.  Only the list used by the chosen kind must be set.
struct StudyConfig {
    std::vector<int> iterations;      // IterationRate checkpoints
    std::vector<double> tau;          // TauRefinement
    std::vector<std::string> variants;  // TauRefinement energy variants; empty means the configured one
    std::vector<int> n_space;         // GridRefinement cells per axis
    std::vector<int> n_time;          // GridRefinement; empty keeps the configured N_t
    std::vector<double> delta_exponents;  // DeltaScaling: δ = (Δx)^p for every block

    bool operator==(const StudyConfig&) const = default;
};

struct ExperimentConfig {
    ProblemKind problem = ProblemKind::Geodesic;
    GridSpec grid;
    RelaxationPolicy relaxation;
    SolverConfig solver;
    EnergyConfig energy;
    ProfileSpec initial;
    std::optional<ProfileSpec> target;  // geodesics, and flows with the target_measure variant
    OutputConfig output;
    ReferenceKind reference = ReferenceKind::Auto;
    StudyConfig study;
    std::string notes;

    /// Checks module preconditions and that referenced files exist.  Relative
    /// paths are resolved against base_dir.
    void validate(const std::filesystem::path& base_dir = {}) const;
    double final_time() const { return solver.tau * solver.n_outer; }
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const json& j);

/// Reads a JSON config; relative data paths are rewritten relative to the file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Node values of a profile on the spatial grid.
std::vector<double> build_profile(const ProfileSpec& p, const GridSpec& grid);

/// Energy on the grid, with potential sampled and interaction kernel assembled.
EnergySpec build_energy(const ExperimentConfig& c, const GridSpec& grid);

/// Solver options with the output log cadence applied.
SolverConfig build_solver(const ExperimentConfig& c);

}  // namespace wgf::cli
