#pragma once

#include "wgf/cli/config.hpp"
#include "wgf/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wgf::cli {

/// Stable process exit codes.
inline constexpr int kExitConverged = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitIterMax = 2;

enum class StudyKind { IterationRate, TauRefinement, GridRefinement, DeltaScaling };
std::string to_string(StudyKind k);
/// Accepts both `IterationRate` and `iteration_rate` spellings.
StudyKind study_from_string(const std::string& s);

struct RunOptions {
    bool sequential = false;
    int threads = 0;  // 0: WGF_NUM_THREADS, else the hardware count
    std::optional<std::filesystem::path> output_dir;  // overrides output.directory
    std::ostream* log = nullptr;  // progress messages; null means std::cerr
    bool quiet = false;
};

/// Worker count for study members: 1 when sequential.
int thread_count(const RunOptions& opts);

struct GeodesicRun {
    GridSpec grid;
    std::vector<double> rho0, rho1;
    GeodesicResult result;
    double mass_gap = 0.0;
};

/// Builds the densities, checks the mass gap against the relaxation and solves.
/// Throws InvalidInput when the gap exceeds what the relaxation tolerates.
GeodesicRun run_geodesic(const ExperimentConfig& c, const IterationObserver& observer = {});

struct FlowRun {
    GridSpec grid;
    std::vector<double> rho0;
    FlowResult result;
};

FlowRun run_flow(const ExperimentConfig& c, const StepObserver& on_step = {});

/// Reference actually used once `auto` is resolved against the config.
ReferenceKind resolve_reference(const ExperimentConfig& c);

/// ℓ¹ error of snapshots (at the given times) against the exact solution named by the config;
/// nullopt when no exact solution applies.  AggregationEquilibrium compares the last snapshot only.
std::optional<double> reference_error(const ExperimentConfig& c, const GridSpec& grid,
                                      const std::vector<std::vector<double>>& snapshots,
                                      const std::vector<double>& times);

/// Writers used by the commands; each creates `dir` if needed.
void write_geodesic_outputs(const std::filesystem::path& dir, const ExperimentConfig& c, const GeodesicRun& run,
                            double seconds);
void write_flow_outputs(const std::filesystem::path& dir, const ExperimentConfig& c, const FlowRun& run,
                        double seconds);

struct StudyRow {
    std::string variant;
    double parameter = 0.0;
    std::optional<double> error;
    std::optional<double> order;
    int iterations = 0;
    std::string status;  // converged, iter_max, or failed: <message>
};

struct StudyResult {
    StudyKind kind = StudyKind::IterationRate;
    std::vector<StudyRow> rows;
    bool all_converged = true;
};

/// Runs the study matrix; member outputs go to per-member subdirectories of `dir`.
StudyResult run_study(const ExperimentConfig& c, StudyKind kind, const std::filesystem::path& dir,
                      const RunOptions& opts);

int cmd_geodesic(const ExperimentConfig& c, const RunOptions& opts = {});
int cmd_flow(const ExperimentConfig& c, const RunOptions& opts = {});
int cmd_study(const ExperimentConfig& c, StudyKind kind, const RunOptions& opts = {});

/// Loads the config at `path` and dispatches; every failure maps to an exit code.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const std::optional<std::string>& study_kind, const RunOptions& opts);

}  // namespace wgf::cli
