#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include "wgf/constraints.hpp"
#include "wgf/grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace oracle {

struct Dense {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;  // row-major

    Dense() = default;
    Dense(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

inline Dense kron(const Dense& x, const Dense& y) {
    Dense out(x.rows * y.rows, x.cols * y.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j)
            if (x(i, j) != 0.0)
                for (std::size_t k = 0; k < y.rows; ++k)
                    for (std::size_t l = 0; l < y.cols; ++l) out(i * y.rows + k, j * y.cols + l) = x(i, j) * y(k, l);
    return out;
}

inline Dense identity(std::size_t n) {
    Dense out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

/// [x | y] side by side.
inline Dense hcat(const Dense& x, const Dense& y) {
    Dense out(x.rows, x.cols + y.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = x(i, j);
        for (std::size_t j = 0; j < y.cols; ++j) out(i, x.cols + j) = y(i, j);
    }
    return out;
}

/// Dense A_i built by applying the block to unit vectors.
inline Dense dense_block(const wgf::ConstraintBlock& b, std::size_t cols) {
    Dense out(b.rows, cols);
    std::vector<double> e(cols, 0.0), col(b.rows);
    for (std::size_t j = 0; j < cols; ++j) {
        e[j] = 1.0;
        b.apply(e, col);
        for (std::size_t i = 0; i < b.rows; ++i) out(i, j) = col[i];
        e[j] = 0.0;
    }
    return out;
}

/// Dense Aᵗ built from adjoint_add on unit vectors (returned untransposed, rows × cols).
inline Dense dense_adjoint(const wgf::ConstraintBlock& b, std::size_t cols) {
    Dense out(b.rows, cols);
    std::vector<double> e(b.rows, 0.0), col(cols);
    for (std::size_t i = 0; i < b.rows; ++i) {
        e[i] = 1.0;
        std::fill(col.begin(), col.end(), 0.0);
        b.adjoint_add(e, col);
        for (std::size_t j = 0; j < cols; ++j) out(i, j) = col[j];
        e[i] = 0.0;
    }
    return out;
}

/// The 1D constraint blocks written as Kronecker products of small matrices:
///   PDE      [D_t ⊗ I_x⁽¹⁾ | B_t ⊗ D_x⁽¹⁾], D_t rows (−1, 1), B_t rows (1, 1)/(1, 0)
///   boundary [0 | I_{N_t+1} ⊗ D_x⁽²⁾] with D_x⁽²⁾ = (−e₀ᵗ; e_Nᵗ) (outer normal)
///   mass     [I_{N_t+1} ⊗ Δx 1ᵗ | 0]
///   initial  [e₀ᵗ ⊗ I | 0], target [e_Nᵗ ⊗ I | 0]
/// Time rows run over the N_t intervals k = 0..N_t−1.
inline std::vector<Dense> kronecker_blocks(const wgf::GridSpec& g, bool geodesic) {
    const std::size_t nx = g.nodes_along(0), nt = g.num_slices(), Nt = g.n_time;
    const double dx = g.dx(0), dt = g.dt();
    const bool cn = g.scheme == wgf::Scheme::CrankNicolson;

    Dense ix1(nx, nx);
    for (std::size_t j = 1; j + 1 < nx; ++j) ix1(j, j) = 1.0;
    Dense dt1(Nt, nt), bt1(Nt, nt);
    for (std::size_t k = 0; k < Nt; ++k) {
        dt1(k, k) = -1.0;
        dt1(k, k + 1) = 1.0;
        bt1(k, k) = 1.0;
        if (cn) bt1(k, k + 1) = 1.0;
    }
    Dense dx1(nx, nx);
    const double c = dt / ((cn ? 4.0 : 2.0) * dx);
    for (std::size_t j = 1; j + 1 < nx; ++j) {
        dx1(j, j - 1) = -c;
        dx1(j, j + 1) = c;
    }
    Dense dx2(2, nx);
    dx2(0, 0) = -1.0;
    dx2(1, nx - 1) = 1.0;
    Dense srho(1, nx);
    for (std::size_t j = 0; j < nx; ++j) srho(0, j) = dx;
    Dense e0(1, nt), eN(1, nt);
    e0(0, 0) = 1.0;
    eN(0, nt - 1) = 1.0;

    const std::size_t field = nx * nt;
    std::vector<Dense> out;
    out.push_back(hcat(kron(dt1, ix1), kron(bt1, dx1)));
    out.push_back(hcat(Dense(2 * nt, field), kron(identity(nt), dx2)));
    out.push_back(hcat(kron(identity(nt), srho), Dense(nt, field)));
    out.push_back(hcat(kron(e0, identity(nx)), Dense(nx, field)));
    if (geodesic) out.push_back(hcat(kron(eN, identity(nx)), Dense(nx, field)));
    return out;
}

/// λ_max(AAᵗ) of the stacked blocks by a dense symmetric eigensolver.
inline double dense_opnorm(const std::vector<Dense>& blocks) {
    std::size_t rows = 0;
    const std::size_t cols = blocks.front().cols;
    for (const auto& b : blocks) rows += b.rows;
    Eigen::MatrixXd a(rows, cols);
    std::size_t r0 = 0;
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) a(r0 + i, j) = b(i, j);
        r0 += b.rows;
    }
    Eigen::MatrixXd ata = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ata, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

/// Largest real root of (x−ρ)(x+λ)² − (λ/2)c by bisection.  Above max(ρ, −λ) the cubic is
/// increasing, and it is ≤ 0 there, so the root is bracketed by doubling.
inline double cubic_root_bisection(double rho, double m2, double lambda) {
    auto p = [&](double x) { return (x - rho) * (x + lambda) * (x + lambda) - 0.5 * lambda * m2; };
    double lo = std::max(rho, -lambda);
    double step = 1.0;
    double hi = lo + step;
    while (p(hi) <= 0.0) {
        step *= 2.0;
        hi = lo + step;
    }
    for (int i = 0; i < 300 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (p(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Direct O(N²) evaluation of Σ_l W(x_j − x_l) ρ_l (Δx)^d.
inline std::vector<double> direct_convolution(const std::function<double(std::span<const double>)>& w,
                                              const wgf::GridSpec& g, std::span<const double> rho,
                                              std::span<const double> stencil_origin_value = {}) {
    const std::size_t n = g.num_nodes();
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const auto xj = g.node_position(j);
        for (std::size_t l = 0; l < n; ++l) {
            const auto xl = g.node_position(l);
            double d[2] = {xj[0] - xl[0], xj[1] - xl[1]};
            double v;
            if (j == l && !stencil_origin_value.empty())
                v = stencil_origin_value[0];
            else
                v = w(std::span<const double>(d, static_cast<std::size_t>(g.dim)));
            out[j] += v * rho[l];
        }
        out[j] *= g.cell_volume();
    }
    return out;
}

/// Composite 5-point Gauss–Legendre rule, written out independently of the library.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels) {
    static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                0.9061798459386640};
    static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                                0.2369268850561891};
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h;
        for (int i = 0; i < 5; ++i) sum += w[i] * f(c + 0.5 * h * x[i]);
    }
    return 0.5 * h * sum;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace oracle
