#include "wgf/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wgf {

double kinetic_value(double rho, std::span<const double> m) {
    double m2 = 0.0;
    for (double v : m) m2 += v * v;
    if (rho > 0.0) return m2 / rho;
    if (rho == 0.0 && m2 == 0.0) return 0.0;
    return std::numeric_limits<double>::infinity();
}

namespace {

inline double cubic(double x, double rho, double lambda, double c) {
    const double s = x + lambda;
    return (x - rho) * s * s - c;
}

inline double cubic_slope(double x, double rho, double lambda) {
    const double s = x + lambda;
    return s * s + 2.0 * (x - rho) * s;
}

}  // namespace

double prox_phi_root(double rho, double m_norm_sq, double lambda) {
    // y = x + λ turns the cubic into y³ − a y² − c with a = ρ + λ, c = λ|m|²/2.
    const double a = rho + lambda;
    const double c = 0.5 * lambda * m_norm_sq;
    const double floor_y = std::max(a, 0.0);
    if (c == 0.0) return floor_y - lambda;

    // Depressed form z³ + p z + q with y = z + a/3.
    const double p = -a * a / 3.0;
    const double half = a * a * a / 27.0 + 0.5 * c;  // −q/2
    const double disc = c * (a * a * a / 27.0 + 0.25 * c);
    double z;
    if (disc > 0.0) {
        const double u = std::cbrt(half + std::copysign(std::sqrt(disc), half));
        z = u == 0.0 ? 0.0 : u - p / (3.0 * u);
    } else {
        const double r = std::abs(a) / 3.0;  // √(−p/3)
        double arg = half / (r * r * r);
        arg = std::clamp(arg, -1.0, 1.0);
        z = 2.0 * r * std::cos(std::acos(arg) / 3.0);
    }
    double y = std::max(z + a / 3.0, floor_y);

    double x = y - lambda;
    double fx = cubic(x, rho, lambda, c);
    const double slope = cubic_slope(x, rho, lambda);
    if (slope > 0.0) {
        const double xn = x - fx / slope;
        if (xn + lambda >= floor_y && std::abs(cubic(xn, rho, lambda, c)) <= std::abs(fx)) x = xn;
    }
    return x;
}

ProxPoint prox_phi_point(double rho, std::span<const double> m, double lambda) {
    if (!(lambda > 0.0)) throw InvalidInput("prox step must be positive");
    double m2 = 0.0;
    for (double v : m) m2 += v * v;
    ProxPoint out;
    const double r = prox_phi_root(rho, m2, lambda);
    if (r > 0.0) {
        out.rho = r;
        const double f = r / (r + lambda);
        for (std::size_t c = 0; c < m.size(); ++c) out.m[c] = f * m[c];
    }
    return out;
}

void prox_phi_field(std::span<const double> u, std::span<double> out, int dim, double lambda,
                    std::span<const double> slice_weights) {
    if (!(lambda > 0.0)) throw InvalidInput("prox step must be positive");
    const std::size_t field = u.size() / static_cast<std::size_t>(1 + dim);
    if (u.size() != out.size() || field * static_cast<std::size_t>(1 + dim) != u.size())
        throw InvalidInput("prox_phi_field: size mismatch");
    const std::size_t slices = slice_weights.empty() ? 1 : slice_weights.size();
    const std::size_t nodes = field / slices;
    if (nodes * slices != field) throw InvalidInput("prox_phi_field: slice weights do not divide the field");
    const double* rho = u.data();
    const double* m0 = u.data() + field;
    const double* m1 = dim == 2 ? u.data() + 2 * field : nullptr;
    double* orho = out.data();
    double* om0 = out.data() + field;
    double* om1 = dim == 2 ? out.data() + 2 * field : nullptr;
    for (std::size_t k = 0; k < slices; ++k) {
        const double step = 2.0 * (slice_weights.empty() ? lambda : lambda * slice_weights[k]);
        if (!(step > 0.0)) throw InvalidInput("prox_phi_field: slice weights must be positive");
        for (std::size_t i = k * nodes; i < (k + 1) * nodes; ++i) {
            double m2 = m0[i] * m0[i];
            if (m1) m2 += m1[i] * m1[i];
            const double r = prox_phi_root(rho[i], m2, step);
            if (r > 0.0) {
                const double f = r / (r + step);
                orho[i] = r;
                om0[i] = f * m0[i];
                if (m1) om1[i] = f * m1[i];
            } else {
                orho[i] = 0.0;
                om0[i] = 0.0;
                if (m1) om1[i] = 0.0;
            }
        }
    }
}

PrimalState prox_phi_field(const PrimalState& u, double lambda) {
    PrimalState out = u;
    prox_phi_field(u.flat(), out.flat(), u.dim(), lambda);
    return out;
}

void project_ball(std::span<const double> x, std::span<const double> center, double radius, std::span<double> out) {
    if (!(radius >= 0.0)) throw InvalidInput("ball radius must be nonnegative");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - center[i];
        d2 += d * d;
    }
    const double d = std::sqrt(d2);
    if (d <= radius) {
        std::copy(x.begin(), x.end(), out.begin());
        return;
    }
    const double f = radius / d;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = center[i] + f * (x[i] - center[i]);
}

std::vector<double> project_ball(std::span<const double> x, std::span<const double> center, double radius) {
    std::vector<double> out(x.size());
    project_ball(x, center, radius, out);
    return out;
}

void prox_indicator_conjugate(std::span<const double> phi, double sigma, const ConstraintSet& set,
                              std::span<double> out) {
    if (!(sigma > 0.0)) throw InvalidInput("dual step must be positive");
    std::vector<double> scaled, proj;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& b = set.block(i);
        auto p = phi.subspan(set.offset(i), b.rows);
        auto o = out.subspan(set.offset(i), b.rows);
        scaled.resize(b.rows);
        proj.resize(b.rows);
        for (std::size_t r = 0; r < b.rows; ++r) scaled[r] = p[r] / sigma;
        project_ball(scaled, b.rhs, b.ball_radius(), proj);
        for (std::size_t r = 0; r < b.rows; ++r) o[r] = p[r] - sigma * proj[r];
    }
}

}  // namespace wgf
