#include "wgf/cli/commands.hpp"
#include "wgf/cli/config.hpp"
#include "wgf/exact.hpp"
#include "wgf/prox.hpp"
#include "wgf/solver.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace wgf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

// Snapshot list as a (count, nodes) array.
Array stack(const std::vector<std::vector<double>>& s) {
    const std::size_t rows = s.size(), cols = rows ? s.front().size() : 0;
    Array out({rows, cols});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) v(i, j) = s[i][j];
    return out;
}

py::dict report_dict(const SolveReport& r) {
    py::dict d;
    d["iterations"] = r.iterations;
    d["converged"] = r.stop_reason == StopReason::Converged;
    d["objective"] = r.objective;
    d["wasserstein"] = r.wasserstein;
    d["residuals"] = r.residuals;
    d["radii"] = r.radii;
    d["energy"] = r.energy_trace;
    d["lambda"] = r.lambda;
    d["sigma"] = r.sigma;
    d["warnings"] = r.warnings;
    return d;
}

py::dict run_config(const std::string& path) {
    const auto c = cli::load_config(path);
    py::dict d;
    if (c.problem == cli::ProblemKind::Geodesic) {
        cli::GeodesicRun run;
        {
            py::gil_scoped_release release;
            run = cli::run_geodesic(c);
        }
        std::vector<std::vector<double>> s;
        for (std::size_t k = 0; k < run.grid.num_slices(); ++k) {
            auto r = run.result.u.rho_slice(k);
            s.emplace_back(r.begin(), r.end());
        }
        d["rho"] = stack(s);
        d["report"] = report_dict(run.result.report);
    } else {
        cli::FlowRun run;
        {
            py::gil_scoped_release release;
            run = cli::run_flow(c);
        }
        d["rho"] = stack(run.result.snapshots);
        d["times"] = run.result.times;
        d["report"] = report_dict(run.result.report);
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dynamic JKO and Wasserstein geodesic solver";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<SolverDiverged>(m, "SolverDiverged", PyExc_RuntimeError);

    m.def(
        "prox_phi_point",
        [](double rho, std::vector<double> mom, double lam) {
            if (mom.empty() || mom.size() > 2) throw InvalidInput("momentum must have 1 or 2 components");
            auto p = prox_phi_point(rho, mom, lam);
            return py::make_tuple(p.rho, std::vector<double>(p.m.begin(), p.m.begin() + static_cast<long>(mom.size())));
        },
        py::arg("rho"), py::arg("m"), py::arg("lam"));

    m.def("kinetic_value", [](double rho, std::vector<double> mom) { return kinetic_value(rho, mom); }, py::arg("rho"),
          py::arg("m"));

    m.def("barenblatt", &barenblatt, py::arg("x"), py::arg("t"), py::arg("m"), py::arg("C"), py::arg("t0"),
          py::arg("alpha") = 1.0);

    m.def("aggregation_equilibrium_1d", &aggregation_equilibrium_1d, py::arg("x"));

    m.def(
        "gaussian_wasserstein",
        [](double mu0, double theta0, double mu1, double theta1, double mass) {
            GaussianParams a{{mu0, 0.0}, theta0, mass}, b{{mu1, 0.0}, theta1, mass};
            return std::sqrt(gaussian_wasserstein_sq(a, b, 1));
        },
        py::arg("mu0"), py::arg("theta0"), py::arg("mu1"), py::arg("theta1"), py::arg("mass") = 1.0);

    m.def(
        "geodesic_1d",
        [](double lower, double upper, int nx, int nt, const Array& rho0, const Array& rho1, double sigma,
           double step_product, int iter_max, double radius) {
            auto g = GridSpec::line(lower, upper, nx, nt);
            const auto r0 = to_vector(rho0), r1 = to_vector(rho1);
            SolverConfig c;
            c.sigma = sigma;
            c.step_product = step_product;
            c.iter_max = iter_max;
            const auto policy = radius > 0.0 ? RelaxationPolicy::explicit_radii({radius}) : RelaxationPolicy::scaled();
            GeodesicResult res;
            {
                py::gil_scoped_release release;
                res = solve_geodesic(g, r0, r1, policy, c);
            }
            std::vector<std::vector<double>> s;
            for (std::size_t k = 0; k < g.num_slices(); ++k) {
                auto r = res.u.rho_slice(k);
                s.emplace_back(r.begin(), r.end());
            }
            py::dict d;
            d["rho"] = stack(s);
            d["report"] = report_dict(res.report);
            return d;
        },
        py::arg("lower"), py::arg("upper"), py::arg("nx"), py::arg("nt"), py::arg("rho0"), py::arg("rho1"),
        py::arg("sigma") = 0.1, py::arg("step_product") = 0.99, py::arg("iter_max") = 100000,
        py::arg("radius") = 0.0,
        "Geodesic on [lower, upper] with nx cells and nt time steps; radius 0 uses grid-scaled relaxation.");

    m.def("run_config", &run_config, py::arg("path"), "Runs a JSON experiment config and returns densities and report.");
}
