#include "oracles.hpp"
#include "wgf/exact.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wgf;

namespace {

const GaussianParams kG0{{-1.5, 0.0}, 0.3, 0.5};
const GaussianParams kG1{{1.5, 0.0}, 0.6, 0.5};


}  // namespace

TEST_CASE("gaussian geodesic endpoints") {
    for (double x : {-2.0, -1.5, -0.3, 0.0, 1.1, 2.7}) {
        const double xs[1] = {x};
        auto a = gaussian_geodesic(kG0, kG1, 0.0, xs);
        const double r0 = gaussian_density(kG0, xs);
        CHECK(a.rho == doctest::Approx(r0).epsilon(1e-14));
        const double T = 2.0 * (x + 1.5) + 1.5;
        CHECK(a.m[0] == doctest::Approx(r0 * (T - x)).epsilon(1e-13));
        auto b = gaussian_geodesic(kG0, kG1, 1.0, xs);
        CHECK(b.rho == doctest::Approx(gaussian_density(kG1, xs)).epsilon(1e-13));
    }
    const double xs[1] = {0.0};
    CHECK_THROWS_AS(gaussian_geodesic(kG0, kG1, 1.5, xs), InvalidInput);
    CHECK_THROWS_AS(gaussian_geodesic(kG0, GaussianParams{{0.0, 0.0}, 0.6, 1.0}, 0.5, xs), InvalidInput);
}

TEST_CASE("gaussian geodesic mass and continuity equation") {
    for (double t : {0.0, 0.25, 0.5, 1.0}) {
        const double m = oracle::gauss_legendre(
            [t](double x) {
                const double xs[1] = {x};
                return gaussian_geodesic(kG0, kG1, t, xs).rho;
            },
            -8.0, 8.0, 400);
        CHECK(std::abs(m - 0.5) <= 1e-8);
    }
    auto residual = [](double h) {
        double worst = 0.0;
        for (double t : {0.3, 0.5, 0.7})
            for (double x = -1.0; x <= 1.0; x += 0.25) {
                auto f = [](double xx, double tt) {
                    const double xs[1] = {xx};
                    return gaussian_geodesic(kG0, kG1, tt, xs);
                };
                const double dt = (f(x, t + h).rho - f(x, t - h).rho) / (2 * h);
                const double dx = (f(x + h, t).m[0] - f(x - h, t).m[0]) / (2 * h);
                worst = std::max(worst, std::abs(dt + dx));
            }
        return worst;
    };
    const double e1 = residual(1e-2), e2 = residual(5e-3);
    CHECK(e2 < e1);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("gaussian transport cost") {
    // M ∫ |T(x) − x|² ρ₀/M by quadrature
    const double cost = oracle::gauss_legendre(
        [](double x) {
            const double xs[1] = {x};
            const double T = 2.0 * (x + 1.5) + 1.5;
            return (T - x) * (T - x) * gaussian_density(kG0, xs);
        },
        -6.0, 6.0, 400);
    CHECK(gaussian_wasserstein_sq(kG0, kG1, 1) == doctest::Approx(cost).epsilon(1e-10));
}

TEST_CASE("barenblatt profile") {
    const double m = 2.0, C = std::cbrt(3.0 / 16.0), t0 = 1e-3;
    const double R = barenblatt_support_radius(0.0, m, C, t0);
    CHECK(barenblatt(R * 1.01, 0.0, m, C, t0) == 0.0);
    CHECK(barenblatt(R * 0.99, 0.0, m, C, t0) > 0.0);
    std::vector<double> masses;
    for (double t : {0.0, 0.5, 1.0}) {
        const double r = barenblatt_support_radius(t, m, C, t0);
        masses.push_back(oracle::gauss_legendre([&](double x) { return barenblatt(x, t, m, C, t0); }, -r, r, 2000));
    }
    CHECK(std::abs(masses[1] - masses[0]) <= 1e-8);
    CHECK(std::abs(masses[2] - masses[0]) <= 1e-8);
    CHECK_THROWS_AS(barenblatt(0.0, 0.0, 1.0, C, t0), InvalidInput);
    CHECK_THROWS_AS(barenblatt(0.0, -1.0, m, C, 0.5), InvalidInput);
}

TEST_CASE("barenblatt solves the porous medium equation") {
    const double m = 2.0, C = std::cbrt(3.0 / 16.0), t0 = 1e-3;
    auto residual = [&](double alpha, double h) {
        double worst = 0.0;
        for (double t : {0.01, 0.05}) {
            const double R = barenblatt_support_radius(t, m, C, t0, alpha);
            for (double f : {0.0, 0.2, 0.4, 0.6}) {
                const double x = f * R;
                auto u = [&](double xx, double tt) { return barenblatt(xx, tt, m, C, t0, alpha); };
                const double dt = (u(x, t + h) - u(x, t - h)) / (2 * h);
                const double lap = (std::pow(u(x + h, t), m) - 2 * std::pow(u(x, t), m) + std::pow(u(x - h, t), m)) / (h * h);
                worst = std::max(worst, std::abs(dt - lap) / std::max(std::abs(dt), std::abs(lap)));
            }
        }
        return worst;
    };
    const double e1 = residual(1.0, 2e-4), e2 = residual(1.0, 1e-4);
    CHECK(e2 < 1e-3);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.05));
    CHECK(residual(2.0, 1e-4) > 0.4);  // a different scaling constant is not a solution
}

TEST_CASE("fokker-planck steady state") {
    auto V = [](double x) { return 0.5 * x * x; };
    const double C = fp_steady_constant(2.0, V, 1.0, -4.0, 4.0);
    CHECK(C == doctest::Approx(std::pow(3.0 / 8.0, 2.0 / 3.0)).epsilon(1e-7));
    const double support = 2.0 * std::sqrt(C);
    CHECK(fp_steady_state(support + 1e-6, 2.0, V, 1.0, -4.0, 4.0) == 0.0);
    CHECK(fp_steady_state(0.0, 2.0, V, 1.0, -4.0, 4.0) == doctest::Approx(C).epsilon(1e-12));
    CHECK(fp_steady_constant(2.0, V, 2.0, -4.0, 4.0) > C);
    CHECK(fp_steady_constant(3.0, V, 1.0, -4.0, 4.0) > 0.0);

    auto g = GridSpec::line(-4.0, 4.0, 200, 1);
    auto pot = sample_nodes([&](std::span<const double> x) { return V(x[0]); }, g);
    auto d = fp_steady_state_discrete(g, 2.0, pot, 1.0);
    CHECK(slice_mass(d, g) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(fp_steady_state_discrete(g, 1.0, pot, 1.0), InvalidInput);
}

TEST_CASE("aggregation equilibrium and milling radii") {
    CHECK(aggregation_equilibrium_1d(0.0) == doctest::Approx(std::sqrt(2.0) / M_PI));
    CHECK(aggregation_equilibrium_1d(std::sqrt(2.0)) == 0.0);
    CHECK(aggregation_equilibrium_1d(-3.0) == 0.0);
    // split at the square-root endpoints so the rule sees smooth integrands after substitution x = √2 sin s
    const double mass = oracle::gauss_legendre(
        [](double s) { return aggregation_equilibrium_1d(std::sqrt(2.0) * std::sin(s)) * std::sqrt(2.0) * std::cos(s); },
        -M_PI / 2, M_PI / 2, 200);
    CHECK(std::abs(mass - 1.0) <= 1e-10);

    auto [ri, ro] = milling_radii(1.0, 4.0);
    CHECK(ri == doctest::Approx(0.5));
    CHECK(ro == doctest::Approx(std::sqrt(1.25)));
    auto [a, b] = milling_radii(3.0, 3.0);
    CHECK(a == doctest::Approx(1.0));
    CHECK(b == doctest::Approx(std::sqrt(2.0)));
    auto [z0, z1] = milling_radii(0.0, 1.0);
    CHECK(z0 == 0.0);
    CHECK(z1 == 1.0);
}

TEST_CASE("l1 error") {
    auto g = GridSpec::line(0.0, 1.0, 10, 1);
    std::mt19937_64 rng(3);
    std::vector<std::vector<double>> a, b, c;
    for (int k = 0; k < 3; ++k) {
        a.push_back(oracle::random_vector(rng, g.num_nodes()));
        b.push_back(oracle::random_vector(rng, g.num_nodes()));
        c.push_back(oracle::random_vector(rng, g.num_nodes()));
    }
    CHECK(l1_error(a, a, g) == 0.0);
    auto shifted = a;
    for (auto& s : shifted)
        for (double& v : s) v += 1.0;
    CHECK(l1_error(a, shifted, g) == doctest::Approx(9.0 / 10.0));
    double direct = 0.0;
    for (int k = 0; k < 3; ++k)
        for (std::size_t j = 1; j + 1 < g.num_nodes(); ++j) direct += std::abs(a[k][j] - b[k][j]);
    CHECK(l1_error(a, b, g) == doctest::Approx(direct / 30.0).epsilon(1e-14));
    CHECK(l1_error(a, b, g) == l1_error(b, a, g));
    CHECK(l1_error(a, c, g) <= l1_error(a, b, g) + l1_error(b, c, g) + 1e-15);
    CHECK_THROWS_AS(l1_error(a, std::vector<std::vector<double>>{b[0]}, g), InvalidInput);

    auto g2 = GridSpec::square(0.0, 1.0, 4, 1);
    std::vector<std::vector<double>> z{std::vector<double>(g2.num_nodes(), 0.0)}, o{std::vector<double>(g2.num_nodes(), 1.0)};
    CHECK(l1_error(z, o, g2) == doctest::Approx(9.0 / 16.0));
}

TEST_CASE("self convergence error") {
    auto g = GridSpec::line(0.0, 1.0, 10, 1);
    std::mt19937_64 rng(4);
    std::vector<std::vector<double>> coarse, fine;
    std::vector<double> tc, tf;
    for (int k = 0; k <= 4; ++k) {
        fine.push_back(oracle::random_vector(rng, g.num_nodes()));
        tf.push_back(0.05 * k);
        if (k % 2 == 0) {
            coarse.push_back(fine.back());
            tc.push_back(0.05 * k);
        }
    }
    CHECK(self_convergence_error(coarse, tc, fine, tf, g) == 0.0);
    coarse[1][3] += 2.0;
    CHECK(self_convergence_error(coarse, tc, fine, tf, g) == doctest::Approx(2.0 / (10.0 * 3.0)));
    tc[1] = 0.07;
    CHECK_THROWS_AS(self_convergence_error(coarse, tc, fine, tf, g), InvalidInput);
}

TEST_CASE("library quadrature") {
    CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0, 10) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
}
