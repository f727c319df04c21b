#include "oracles.hpp"
#include "wgf/constraints.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wgf;

namespace {

std::vector<double> bump(const GridSpec& g, double c) {
    return sample_nodes([c](std::span<const double> x) { return 1.0 + 0.5 * std::cos(c * x[0]); }, g);
}

ConstraintBlock diagonal_block(std::vector<double> d) {
    ConstraintBlock b;
    b.rows = d.size();
    b.apply = [d](std::span<const double> u, std::span<double> out) {
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] * u[i];
    };
    b.adjoint_add = [d](std::span<const double> phi, std::span<double> u) {
        for (std::size_t i = 0; i < d.size(); ++i) u[i] += d[i] * phi[i];
    };
    b.rhs.assign(d.size(), 0.0);
    return b;
}

}  // namespace

TEST_CASE("block counts") {
    auto g = GridSpec::line(0.0, 1.0, 4, 2);
    auto r = bump(g, 1.0);
    auto geo = assemble_geodesic(g, r, r, RelaxationPolicy::scaled());
    auto flow = assemble_flow(g, r, RelaxationPolicy::scaled());
    CHECK(geo.size() == 5);
    CHECK(flow.size() == 4);
    CHECK(geo.block(4).kind == BlockKind::TargetData);
    std::size_t rows = 0;
    for (const auto& b : geo.blocks()) rows += b.rows;
    CHECK(geo.total_rows() == rows);
}

TEST_CASE("matrix-free blocks equal the Kronecker assembly") {
    for (int nx = 2; nx <= 6; ++nx)
        for (int nt = 1; nt <= 3; ++nt)
            for (auto scheme : {Scheme::CrankNicolson, Scheme::ForwardEulerCentered}) {
                auto g = GridSpec::line(-1.0, 2.0, nx, nt, scheme);
                auto r0 = bump(g, 1.0), r1 = bump(g, 2.0);
                auto set = assemble_geodesic(g, r0, r1, RelaxationPolicy::scaled());
                auto ref = oracle::kronecker_blocks(g, true);
                REQUIRE(ref.size() == set.size());
                double worst = 0.0;
                for (std::size_t i = 0; i < set.size(); ++i) {
                    auto d = oracle::dense_block(set.block(i), g.primal_size());
                    REQUIRE(d.rows == ref[i].rows);
                    for (std::size_t e = 0; e < d.a.size(); ++e) worst = std::max(worst, std::abs(d.a[e] - ref[i].a[e]));
                }
                CHECK(worst <= 1e-13);
            }
}

TEST_CASE("adjoints on random pairs") {
    std::mt19937_64 rng(42);
    for (auto g : {GridSpec::line(0.0, 1.0, 6, 3), GridSpec::square(-1.0, 1.0, 4, 2),
                   GridSpec::line(0.0, 3.0, 5, 2, Scheme::ForwardEulerCentered)}) {
        auto r = sample_nodes([](auto) { return 1.0; }, g);
        auto set = assemble_geodesic(g, r, r, RelaxationPolicy::scaled());
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto& b = set.block(i);
            for (int trial = 0; trial < 100; ++trial) {
                auto u = oracle::random_vector(rng, g.primal_size());
                auto phi = oracle::random_vector(rng, b.rows);
                std::vector<double> au(b.rows), atphi(g.primal_size(), 0.0);
                b.apply(u, au);
                b.adjoint_add(phi, atphi);
                const double l = oracle::dot(au, phi), rr = oracle::dot(u, atphi);
                CHECK(std::abs(l - rr) <= 1e-12 * std::max(1.0, std::abs(l)));
            }
        }
        // dense adjoint equals the transpose of the dense block
        auto d = oracle::dense_block(set.block(0), g.primal_size());
        auto dt = oracle::dense_adjoint(set.block(0), g.primal_size());
        for (std::size_t e = 0; e < d.a.size(); ++e) CHECK(std::abs(d.a[e] - dt.a[e]) <= 1e-14);
    }
}

TEST_CASE("stationary feasible point has zero residuals") {
    for (auto g : {GridSpec::line(0.0, 1.0, 8, 4), GridSpec::square(0.0, 1.0, 5, 3)}) {
        auto r = sample_nodes([](std::span<const double> x) { return 2.0 + x[0]; }, g);
        auto set = assemble_geodesic(g, r, r, RelaxationPolicy::scaled());
        PrimalState u(g);
        for (std::size_t k = 0; k < g.num_slices(); ++k) std::copy(r.begin(), r.end(), u.rho_slice(k).begin());
        for (double v : set.residual_norms(u.flat())) CHECK(v <= 1e-12);
    }
}

TEST_CASE("mass block vanishes for slices of matching mass") {
    auto g = GridSpec::line(0.0, 1.0, 6, 3);
    auto r0 = bump(g, 3.0);
    auto set = assemble_flow(g, r0, RelaxationPolicy::scaled());
    std::mt19937_64 rng(1);
    PrimalState u(g);
    const double m0 = slice_mass(r0, g);
    for (std::size_t k = 0; k < g.num_slices(); ++k) {
        auto v = oracle::random_vector(rng, g.num_nodes(), 0.0, 1.0);
        const double s = slice_mass(v, g);
        for (std::size_t j = 0; j < v.size(); ++j) u.rho_slice(k)[j] = v[j] * m0 / s;
    }
    CHECK(set.residual_norms(u.flat())[2] <= 1e-12);
}

TEST_CASE("residual of the zero state on the initial block") {
    auto g = GridSpec::square(0.0, 2.0, 4, 2);
    auto r0 = sample_nodes([](std::span<const double> x) { return 1.0 + x[0] * x[1]; }, g);
    auto set = assemble_geodesic(g, r0, r0, RelaxationPolicy::scaled());
    std::vector<double> zero(g.primal_size(), 0.0);
    double s = 0.0;
    for (double v : r0) s += v * v;
    CHECK(set.residual_norms(zero)[3] == doctest::Approx(std::sqrt(s * g.cell_volume())).epsilon(1e-13));
}

TEST_CASE("residual norms against the dense weighted computation") {
    auto g = GridSpec::line(0.0, 1.0, 5, 3);
    auto r0 = bump(g, 1.0), r1 = bump(g, 4.0);
    auto set = assemble_geodesic(g, r0, r1, RelaxationPolicy::scaled());
    auto ref = oracle::kronecker_blocks(g, true);
    std::mt19937_64 rng(9);
    auto u = oracle::random_vector(rng, g.primal_size());
    const double dx = g.dx(0), dt = g.dt();
    // quadrature weights of the unscaled rows: PDE rows are Δt(…), so weight Δx/Δt; flux Δt; mass Δt; data Δx
    const double weight[5] = {dx / dt, dt, dt, dx, dx};
    const double m0 = slice_mass(r0, g);
    auto norms = set.residual_norms(u);
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < ref[i].rows; ++r) {
            double v = 0.0;
            for (std::size_t c = 0; c < ref[i].cols; ++c) v += ref[i](r, c) * u[c];
            double rhs = 0.0;
            if (i == 2) rhs = m0;
            if (i == 3) rhs = r0[r];
            if (i == 4) rhs = r1[r];
            s += (v - rhs) * (v - rhs);
        }
        CHECK(norms[i] == doctest::Approx(std::sqrt(weight[i] * s)).epsilon(1e-12));
    }
}

TEST_CASE("scaling rows and radius together leaves the feasibility ratio unchanged") {
    auto g = GridSpec::line(0.0, 1.0, 5, 2);
    auto r = bump(g, 2.0);
    auto set = assemble_flow(g, r, RelaxationPolicy::scaled());
    std::vector<ConstraintBlock> scaled = set.blocks();
    for (auto& b : scaled) {
        auto apply = b.apply;
        b.apply = [apply](std::span<const double> u, std::span<double> out) {
            apply(u, out);
            for (double& v : out) v *= 3.0;
        };
        for (double& v : b.rhs) v *= 3.0;
        b.scale *= 3.0;
    }
    ConstraintSet s3(set.cols(), scaled);
    std::mt19937_64 rng(2);
    auto u = oracle::random_vector(rng, g.primal_size());
    auto a = set.residual_norms(u), b = s3.residual_norms(u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
        CHECK(s3.block(i).ball_radius() == doctest::Approx(3.0 * set.block(i).ball_radius()));
    }
}

TEST_CASE("relaxation radii policy") {
    auto g = GridSpec::line(0.0, 1.0, 10, 4);
    auto r = RelaxationPolicy::scaled(2.0, 3.0).radii(g, 5);
    CHECK(r[0] == doctest::Approx(2.0 * (0.01 + 0.0625)));
    for (int i = 1; i < 5; ++i) CHECK(r[i] == doctest::Approx(0.03));
    auto e = RelaxationPolicy::explicit_radii({1e-5}).radii(g, 4);
    for (double v : e) CHECK(v == 1e-5);
    CHECK_THROWS_AS(RelaxationPolicy::explicit_radii({1.0, 2.0}).radii(g, 4), InvalidInput);
    CHECK_THROWS_AS(RelaxationPolicy::explicit_radii({-1.0}).radii(g, 4), InvalidInput);
}

TEST_CASE("input validation") {
    auto g = GridSpec::line(0.0, 1.0, 4, 2);
    std::vector<double> neg(g.num_nodes(), 1.0);
    neg[2] = -0.1;
    std::vector<double> ok(g.num_nodes(), 1.0);
    CHECK_THROWS_AS(assemble_geodesic(g, neg, ok, RelaxationPolicy::scaled()), InvalidInput);
    CHECK_THROWS_AS(assemble_flow(g, std::vector<double>(3, 1.0), RelaxationPolicy::scaled()), InvalidInput);
    std::vector<double> heavy(g.num_nodes(), 2.0);
    CHECK(assemble_geodesic(g, ok, heavy, RelaxationPolicy::scaled()).warnings.size() == 1);
    CHECK(assemble_geodesic(g, ok, ok, RelaxationPolicy::scaled()).warnings.empty());
}

TEST_CASE("operator norm examples") {
    ConstraintSet id(3, {diagonal_block({1.0, 1.0, 1.0})});
    auto e1 = estimate_opnorm(id, 1e-10);
    CHECK(e1.converged);
    CHECK(e1.value == doctest::Approx(1.0).epsilon(1e-10));
    ConstraintSet diag(3, {diagonal_block({1.0, 2.0, 3.0})});
    auto e2 = estimate_opnorm(diag, 1e-12, 5000);
    CHECK(e2.value == doctest::Approx(9.0).epsilon(1e-8));
    CHECK_THROWS_AS(estimate_opnorm(diag, 1e-8, 0), InvalidInput);
    auto e3 = estimate_opnorm(diag, 1e-14, 2);
    CHECK_FALSE(e3.converged);
    CHECK(e3.value > 0.0);
}

TEST_CASE("operator norm against the dense eigensolver") {
    for (auto scheme : {Scheme::CrankNicolson, Scheme::ForwardEulerCentered}) {
        auto g = GridSpec::line(0.0, 1.0, 4, 2, scheme);
        auto r = bump(g, 1.0);
        auto set = assemble_geodesic(g, r, r, RelaxationPolicy::scaled());
        std::vector<oracle::Dense> dense;
        for (const auto& b : set.blocks()) dense.push_back(oracle::dense_block(b, g.primal_size()));
        const double ref = oracle::dense_opnorm(dense);
        auto est = estimate_opnorm(set, 1e-13, 100000);
        CHECK(std::abs(est.value - ref) <= 1e-6 * ref);
        CHECK(std::abs(oracle::dense_opnorm(oracle::kronecker_blocks(g, true)) - ref) <= 1e-10 * ref);
    }
}

TEST_CASE("mass gap tolerance") {
    auto g = GridSpec::line(0.0, 1.0, 4, 4);
    CHECK(mass_gap_tolerance(g, 0.1, 0.0) == doctest::Approx(0.2));
    CHECK(mass_gap_tolerance(g, 0.0, 0.1) == doctest::Approx(0.1 * std::sqrt(0.25 * 5)));
}
