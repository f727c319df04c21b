#include "wgf/exact.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace wgf {

void GaussianParams::validate() const {
    if (!(theta > 0.0)) throw InvalidInput("gaussian theta must be positive");
    if (!(mass > 0.0)) throw InvalidInput("gaussian mass must be positive");
}

double gaussian_density(const GaussianParams& p, std::span<const double> x) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - p.mu[i];
        r2 += d * d;
    }
    const double norm = std::pow(std::numbers::pi * p.theta * p.theta, 0.5 * static_cast<double>(x.size()));
    return p.mass / norm * std::exp(-r2 / (p.theta * p.theta));
}

DensityMomentum gaussian_geodesic(const GaussianParams& p0, const GaussianParams& p1, double t,
                                  std::span<const double> x) {
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("geodesic time must lie in [0, 1]");
    if (std::abs(p0.mass - p1.mass) > 1e-12 * p0.mass) throw InvalidInput("geodesic endpoints must have equal mass");
    const double r = p1.theta / p0.theta;
    const double s = 1.0 - t + t * r;  // T_t = s·x + shift
    DensityMomentum out;
    std::array<double, 2> y{};
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] + (r * p0.mu[i] - p1.mu[i]) * t) / s;
    const double det = std::pow(1.0 / s, static_cast<double>(x.size()));
    out.rho = gaussian_density(p0, std::span<const double>(y.data(), x.size())) * det;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double ty = r * (y[i] - p0.mu[i]) + p1.mu[i];
        out.m[i] = out.rho * (ty - y[i]);
    }
    return out;
}

double gaussian_wasserstein_sq(const GaussianParams& p0, const GaussianParams& p1, int dim) {
    const double r = p1.theta / p0.theta;
    double shift = 0.0;
    for (int i = 0; i < dim; ++i) shift += (p1.mu[i] - p0.mu[i]) * (p1.mu[i] - p0.mu[i]);
    return p0.mass * (dim * p0.theta * p0.theta * (r - 1.0) * (r - 1.0) / 2.0 + shift);
}

double barenblatt(double x, double t, double m, double C, double t0, double alpha) {
    if (!(m > 1.0)) throw InvalidInput("barenblatt profile needs m > 1");
    const double s = t + t0;
    if (!(s > 0.0)) throw InvalidInput("barenblatt profile needs t + t0 > 0");
    const double k = alpha * (m - 1.0) / (2.0 * m * (m + 1.0));
    const double inner = C - k * x * x * std::pow(s, -2.0 / (m + 1.0));
    if (inner <= 0.0) return 0.0;
    return std::pow(s, -1.0 / (m + 1.0)) * std::pow(inner, 1.0 / (m - 1.0));
}

double barenblatt_support_radius(double t, double m, double C, double t0, double alpha) {
    const double k = alpha * (m - 1.0) / (2.0 * m * (m + 1.0));
    return std::sqrt(C / k) * std::pow(t + t0, 1.0 / (m + 1.0));
}

double fp_profile(double v, double m, double C) {
    const double inner = C - (m - 1.0) * v / m;
    return inner > 0.0 ? std::pow(inner, 1.0 / (m - 1.0)) : 0.0;
}

double integrate(const std::function<double(double)>& f, double a, double b, int panels) {
    static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                     0.8611363115940526};
    static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                     0.3478548451374538};
    const double h = (b - a) / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (int q = 0; q < 4; ++q) s += gw[q] * f(mid + 0.5 * h * gx[q]);
    }
    return 0.5 * h * s;
}

namespace {

template <typename MassFn>
double bisect_constant(MassFn mass_of, double lo, double target) {
    if (!(target > 0.0)) throw InvalidInput("steady state mass must be positive");
    double step = std::max(1.0, std::abs(lo));
    double hi = lo + step;
    int grow = 0;
    while (mass_of(hi) < target) {
        step *= 2.0;
        hi = lo + step;
        if (++grow > 200) throw InvalidInput("steady-state bisection could not bracket the requested mass");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass_of(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double fp_steady_constant(double m, const std::function<double(double)>& potential, double mass, double a,
                          double b) {
    if (!(m > 1.0)) throw InvalidInput("steady state needs m > 1");
    // Lower bracket: the profile vanishes everywhere when C ≤ min (m−1)V/m.
    double vmin = INFINITY;
    const int probe = 4000;
    for (int i = 0; i <= probe; ++i) vmin = std::min(vmin, potential(a + (b - a) * i / probe));
    const double lo = (m - 1.0) * vmin / m;
    auto mass_of = [&](double C) {
        return integrate([&](double x) { return fp_profile(potential(x), m, C); }, a, b, 4000);
    };
    return bisect_constant(mass_of, lo, mass);
}

double fp_steady_state(double x, double m, const std::function<double(double)>& potential, double mass, double a,
                       double b) {
    return fp_profile(potential(x), m, fp_steady_constant(m, potential, mass, a, b));
}

std::vector<double> fp_steady_state_discrete(const GridSpec& grid, double m, std::span<const double> potential,
                                             double mass) {
    if (!(m > 1.0)) throw InvalidInput("steady state needs m > 1");
    if (potential.size() != grid.num_nodes()) throw InvalidInput("potential has wrong number of nodes");
    const double vmin = *std::min_element(potential.begin(), potential.end());
    const double vol = grid.cell_volume();
    auto mass_of = [&](double C) {
        double s = 0.0;
        for (double v : potential) s += fp_profile(v, m, C);
        return s * vol;
    };
    const double C = bisect_constant(mass_of, (m - 1.0) * vmin / m, mass);
    std::vector<double> rho(potential.size());
    for (std::size_t j = 0; j < rho.size(); ++j) rho[j] = fp_profile(potential[j], m, C);
    return rho;
}

double aggregation_equilibrium_1d(double x) {
    const double r = 2.0 - x * x;
    return r > 0.0 ? std::sqrt(r) / std::numbers::pi : 0.0;
}

std::pair<double, double> milling_radii(double alpha, double beta) {
    if (!(alpha >= 0.0) || !(beta > 0.0)) throw InvalidInput("milling radii need alpha >= 0 and beta > 0");
    return {std::sqrt(alpha / beta), std::sqrt(alpha / beta + 1.0)};
}

namespace {

bool interior(const GridSpec& grid, std::size_t node) {
    const std::size_t nx = grid.nodes_along(0);
    const std::size_t ix = node % nx;
    if (ix == 0 || ix + 1 == nx) return false;
    if (grid.dim == 2) {
        const std::size_t iy = node / nx;
        if (iy == 0 || iy + 1 == grid.nodes_along(1)) return false;
    }
    return true;
}

}  // namespace

double l1_error(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                const GridSpec& grid) {
    if (a.size() != b.size() || a.empty()) throw InvalidInput("l1_error: snapshot counts differ or are zero");
    const std::size_t n = grid.num_nodes();
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].size() != n || b[k].size() != n) throw InvalidInput("l1_error: snapshot has wrong size");
        for (std::size_t j = 0; j < n; ++j)
            if (interior(grid, j)) s += std::abs(a[k][j] - b[k][j]);
    }
    double cells = 1.0;
    for (int l = 0; l < grid.dim; ++l) cells *= grid.n_space[l];
    return s / (cells * static_cast<double>(a.size()));
}

double l1_error(const DensityField& a, const DensityField& b, const GridSpec& grid) {
    if (a.slices() != b.slices() || a.nodes() != b.nodes()) throw InvalidInput("l1_error: field shapes differ");
    std::vector<std::vector<double>> sa, sb;
    for (std::size_t k = 0; k < a.slices(); ++k) {
        sa.emplace_back(a.slice(k).begin(), a.slice(k).end());
        sb.emplace_back(b.slice(k).begin(), b.slice(k).end());
    }
    return l1_error(sa, sb, grid);
}

double self_convergence_error(const std::vector<std::vector<double>>& coarse, std::span<const double> coarse_times,
                              const std::vector<std::vector<double>>& fine, std::span<const double> fine_times,
                              const GridSpec& grid) {
    if (coarse.size() != coarse_times.size() || fine.size() != fine_times.size())
        throw InvalidInput("snapshot and time lists differ in length");
    std::vector<std::vector<double>> matched;
    for (double t : coarse_times) {
        auto it = std::find_if(fine_times.begin(), fine_times.end(),
                               [t](double s) { return std::abs(s - t) <= 1e-9 * std::max(1.0, std::abs(t)); });
        if (it == fine_times.end()) {
            std::ostringstream msg;
            msg << "fine run has no snapshot at t = " << t;
            throw InvalidInput(msg.str());
        }
        matched.push_back(fine[static_cast<std::size_t>(it - fine_times.begin())]);
    }
    return l1_error(coarse, matched, grid);
}

}  // namespace wgf
