#include "wgf/cli/commands.hpp"
#include "wgf/cli/config.hpp"
#include "wgf/cli/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

using namespace wgf;
using namespace wgf::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("wgf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

json geodesic_json() {
    return json::parse(R"({
      "problem": "geodesic",
      "grid": {"dim": 1, "lower": [-2], "upper": [2], "n_space": [20], "n_time": 4},
      "relaxation": {"mode": "explicit", "values": [1e-3]},
      "solver": {"sigma": 0.5, "iter_max": 20000},
      "initial": {"kind": "gaussian", "mu": [0.0], "theta": 0.5, "mass": 1.0},
      "target": {"kind": "gaussian", "mu": [0.5], "theta": 0.5, "mass": 1.0},
      "output": {"directory": "out", "log_interval": 100}
    })");
}

double mass_of(const std::vector<double>& r, const GridSpec& g) { return slice_mass(r, g); }

}  // namespace

TEST_CASE("config round trip") {
    auto c = config_from_json(geodesic_json());
    CHECK(c.problem == ProblemKind::Geodesic);
    CHECK(c.grid.n_space[0] == 20);
    CHECK(*c.solver.sigma == 0.5);
    auto again = config_from_json(to_json(c));
    CHECK(again == c);
    CHECK(to_json(again) == to_json(c));

    auto flow = json::parse(R"({
      "problem": "flow",
      "grid": {"dim": 2, "lower": [-1, -1], "upper": [1, 1], "n_space": [8, 8], "n_time": 2, "scheme": "forward_euler"},
      "relaxation": {"mode": "scaled_to_grid", "c1": 2, "c2": 0.5},
      "solver": {"lambda": 0.2, "sigma": 0.01, "tau": 0.1, "n_outer": 3},
      "energy": {"internal": "entropy", "variant": "higher_order",
                 "potential": [{"kind": "log", "c": 0.25}],
                 "interaction": [{"kind": "power_law", "a": 2, "b": 0}],
                 "artificial_diffusion_factor": 1.6},
      "initial": {"kind": "gaussian_sum", "components": [{"mu": [0.2, 0.0], "theta": 0.3, "mass": 0.5},
                                                         {"mu": [-0.2, 0.0], "theta": 0.3, "mass": 0.5}]},
      "output": {"directory": "flow_out", "snapshot_every": 2}
    })");
    auto f = config_from_json(flow);
    CHECK(config_from_json(to_json(f)) == f);
    CHECK(f.energy.interaction.size() == 1);
    CHECK(f.grid.scheme == Scheme::ForwardEulerCentered);
}

TEST_CASE("config rejects bad input") {
    auto j = geodesic_json();
    j["solver"]["sigmaa"] = 1.0;
    CHECK_THROWS_AS(config_from_json(j), InvalidInput);
    auto k = geodesic_json();
    k.erase("target");
    CHECK_THROWS_AS(config_from_json(k).validate(), InvalidInput);
    auto r = geodesic_json();
    r["initial"] = json::parse(R"({"kind": "raster", "path": "does_not_exist.pgm"})");
    CHECK_THROWS_AS(config_from_json(r).validate(), InvalidInput);
}

TEST_CASE("built energies") {
    auto flow = json::parse(R"({
      "problem": "flow",
      "grid": {"dim": 1, "lower": [-1], "upper": [1], "n_space": [10], "n_time": 2},
      "solver": {"sigma": 0.01, "tau": 0.1},
      "energy": {"internal": "power", "exponent": 2, "potential": [{"kind": "quadratic", "c": 1}],
                 "artificial_diffusion_factor": 1.6},
      "initial": {"kind": "uniform", "mass": 2.0}
    })");
    auto c = config_from_json(flow);
    auto e = build_energy(c, c.grid);
    CHECK(e.potential[0] == doctest::Approx(0.5));
    CHECK(e.artificial_diffusion == doctest::Approx(1.6 * 0.04));
    auto rho = build_profile(c.initial, c.grid);
    CHECK(mass_of(rho, c.grid) == doctest::Approx(2.0));
}

TEST_CASE("raster ingestion") {
    auto g = GridSpec::square(0.0, 1.0, 3, 1);  // 4×4 nodes
    RasterDensity white{4, 4, 255, std::vector<std::uint16_t>(16, 255)};
    auto u = ingest_raster(white, g, 2.0);
    for (double v : u) CHECK(v == doctest::Approx(u[0]));
    CHECK(slice_mass(u, g) == doctest::Approx(2.0));

    RasterDensity spike{4, 4, 255, std::vector<std::uint16_t>(16, 0)};
    spike.pixels[1 * 4 + 2] = 255;  // row 1 from the top, column 2
    auto s = ingest_raster(spike, g, 1.0);
    for (std::size_t node = 0; node < s.size(); ++node) {
        const bool hit = node == 2 * 4 + 2;  // row 1 from the top is iy = 2
        CHECK(s[node] == doctest::Approx(hit ? 1.0 / g.cell_volume() : 0.0));
    }

    // left column of nodes covers a checkerboard, right column solid white
    auto h = GridSpec::square(0.0, 1.0, 2, 1);  // 3×3 nodes, two pixels per node column
    RasterDensity mixed{6, 3, 255, {0, 255, 255, 255, 255, 255,  //
                                    255, 0, 255, 255, 255, 255,  //
                                    0, 255, 255, 255, 255, 255}};
    auto m = ingest_raster(mixed, h, 1.0);
    for (std::size_t iy = 0; iy < 3; ++iy) {
        CHECK(m[iy * 3] / m[iy * 3 + 1] == doctest::Approx(0.5));
        CHECK(m[iy * 3 + 2] == doctest::Approx(m[iy * 3 + 1]));
    }

    RasterDensity black{2, 2, 255, std::vector<std::uint16_t>(4, 0)};
    CHECK_THROWS_AS(ingest_raster(black, h, 1.0), InvalidInput);
}

TEST_CASE("PGM files") {
    TempDir tmp;
    RasterDensity img{3, 2, 65535, {0, 1000, 65535, 7, 8, 9}};
    for (bool binary : {true, false}) {
        auto p = tmp.path / (binary ? "a.pgm" : "b.pgm");
        write_pgm(p, img, binary);
        auto back = read_pgm(p);
        CHECK(back.width == 3);
        CHECK(back.height == 2);
        CHECK(back.pixels == img.pixels);
    }
    {
        std::ofstream(tmp.path / "c.pgm") << "P2\n# comment\n2 1\n255\n10 20\n";
        auto c = read_pgm(tmp.path / "c.pgm");
        CHECK(c.pixels == std::vector<std::uint16_t>{10, 20});
    }
    std::ofstream(tmp.path / "bad.pgm") << "P6\n1 1\n255\n";
    CHECK_THROWS_AS(read_pgm(tmp.path / "bad.pgm"), InvalidInput);
    CHECK_THROWS_AS(read_pgm(tmp.path / "missing.pgm"), InvalidInput);
}

TEST_CASE("snapshot CSV round trip keeps 17 digits") {
    TempDir tmp;
    auto g = GridSpec::square(-1.0, 1.0, 3, 1);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> snaps(3, std::vector<double>(g.num_nodes()));
    for (auto& s : snaps)
        for (double& v : s) v = u(rng) * std::pow(10.0, 20.0 * u(rng));
    const std::vector<double> times{0.0, 1.0 / 3.0, 2.0 / 3.0};
    write_snapshots_csv(tmp.path / "rho.csv", g, snaps, times, {0, 5, 10});
    auto back = read_snapshots_csv(tmp.path / "rho.csv", g);
    CHECK(back.values == snaps);
    CHECK(back.times == times);
    CHECK(back.indices == std::vector<int>{0, 5, 10});
    CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("table files") {
    TempDir tmp;
    std::ofstream(tmp.path / "t.txt") << "# header\n1, 2.5\n3e-2 4 # trailing\n";
    CHECK(read_table(tmp.path / "t.txt") == std::vector<double>{1.0, 2.5, 0.03, 4.0});
    std::ofstream(tmp.path / "u.txt") << "1 x\n";
    CHECK_THROWS_AS(read_table(tmp.path / "u.txt"), InvalidInput);
}

TEST_CASE("study kinds") {
    CHECK(study_from_string("IterationRate") == StudyKind::IterationRate);
    CHECK(study_from_string("tau_refinement") == StudyKind::TauRefinement);
    CHECK(study_from_string("GridRefinement") == StudyKind::GridRefinement);
    CHECK(study_from_string("delta_scaling") == StudyKind::DeltaScaling);
    for (auto k : {StudyKind::IterationRate, StudyKind::TauRefinement, StudyKind::GridRefinement, StudyKind::DeltaScaling})
        CHECK(study_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(study_from_string("bogus"), InvalidInput);
}

TEST_CASE("exit codes and run directory contents") {
    TempDir tmp;
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    opts.quiet = true;

    auto j = geodesic_json();
    std::ofstream(tmp.path / "ok.json") << j.dump();
    opts.output_dir = tmp.path / "ok";
    CHECK(run_command("geodesic", tmp.path / "ok.json", std::nullopt, opts) == kExitConverged);
    for (const char* f : {"config.json", "manifest.json", "rho.csv", "momentum_x.csv", "distance.txt", "log.csv",
                          "report.json"})
        CHECK(fs::exists(tmp.path / "ok" / f));
    std::ifstream dist(tmp.path / "ok" / "distance.txt");
    double d = 1.0;
    dist >> d;
    CHECK(d == doctest::Approx(0.5).epsilon(0.02));
    // the copied config reloads to the same experiment
    auto copied = load_config(tmp.path / "ok" / "config.json");
    CHECK(copied.grid == config_from_json(j).grid);

    // identical endpoints: the distance vanishes whatever the stop reason
    j["target"]["mu"] = json::array({0.0});
    std::ofstream(tmp.path / "same.json") << j.dump();
    opts.output_dir = tmp.path / "same";
    CHECK(run_command("geodesic", tmp.path / "same.json", std::nullopt, opts) != kExitInvalid);
    std::ifstream same(tmp.path / "same" / "distance.txt");
    same >> d;
    CHECK(d <= 1e-3);

    j["target"]["mu"] = json::array({1.0});
    j["solver"]["iter_max"] = 10;
    std::ofstream(tmp.path / "short.json") << j.dump();
    opts.output_dir = tmp.path / "short";
    CHECK(run_command("geodesic", tmp.path / "short.json", std::nullopt, opts) == kExitIterMax);

    j["target"]["mass"] = 3.0;
    std::ofstream(tmp.path / "gap.json") << j.dump();
    opts.output_dir = tmp.path / "gap";
    CHECK(run_command("geodesic", tmp.path / "gap.json", std::nullopt, opts) == kExitInvalid);
    CHECK(log.str().find("mass") != std::string::npos);

    std::ofstream(tmp.path / "broken.json") << "{ not json";
    CHECK(run_command("geodesic", tmp.path / "broken.json", std::nullopt, opts) == kExitInvalid);
    CHECK(run_command("geodesic", tmp.path / "absent.json", std::nullopt, opts) == kExitInvalid);
    CHECK(run_command("study", tmp.path / "ok.json", std::nullopt, opts) == kExitInvalid);
}

TEST_CASE("zero energy flow run") {
    TempDir tmp;
    auto j = json::parse(R"({
      "problem": "flow",
      "grid": {"dim": 1, "lower": [-1], "upper": [1], "n_space": [20], "n_time": 2},
      "relaxation": {"mode": "explicit", "values": [1e-3]},
      "solver": {"sigma": 0.01, "tau": 0.1, "n_outer": 2, "iter_max": 20000},
      "initial": {"kind": "gaussian", "mu": [0.1], "theta": 0.3, "mass": 1.0}
    })");
    auto c = config_from_json(j);
    auto run = run_flow(c);
    REQUIRE(run.result.snapshots.size() == 3);
    double l1 = 0.0;
    for (std::size_t i = 0; i < run.rho0.size(); ++i) l1 += std::abs(run.result.snapshots.back()[i] - run.rho0[i]) * c.grid.dx(0);
    CHECK(l1 <= 1e-2);
    write_flow_outputs(tmp.path, c, run, 0.0);
    CHECK(fs::exists(tmp.path / "energy.csv"));
    CHECK(fs::exists(tmp.path / "rho.csv"));
}
