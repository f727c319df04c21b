#include "wgf/cli/commands.hpp"

#include <CLI11.hpp>

#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Wasserstein geodesics and JKO gradient flows"};
    app.require_subcommand(1);

    wgf::cli::RunOptions opts;
    std::string config;
    std::string out;
    std::string kind;
    int threads = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--output", out, "output directory (overrides output.directory)");
        sub->add_flag("--sequential", opts.sequential, "run everything on one thread");
        sub->add_option("-j,--threads", threads, "worker threads for study members (default: WGF_NUM_THREADS)");
        sub->add_flag("-q,--quiet", opts.quiet, "suppress progress messages");
    };
    auto* geo = app.add_subcommand("geodesic", "Wasserstein geodesic between two densities");
    auto* flow = app.add_subcommand("flow", "JKO gradient flow");
    auto* study = app.add_subcommand("study", "convergence study over a parameter list");
    for (auto* sub : {geo, flow, study}) add_common(sub);
    study->add_option("--kind", kind, "IterationRate, TauRefinement, GridRefinement or DeltaScaling")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : wgf::cli::kExitInvalid;
    }
    opts.threads = threads;
    if (!out.empty()) opts.output_dir = out;
    const std::string cmd = geo->parsed() ? "geodesic" : flow->parsed() ? "flow" : "study";
    return wgf::cli::run_command(cmd, config, cmd == "study" ? std::optional<std::string>(kind) : std::nullopt, opts);
}
