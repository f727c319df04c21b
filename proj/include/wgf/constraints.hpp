#pragma once

#include "wgf/grid.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wgf {

enum class BlockKind { PdeResidual, BoundaryFlux, MassConservation, InitialData, TargetData };

std::string to_string(BlockKind k);

/// One relaxed constraint ‖A_i u − b_i‖ ≤ δ_i, applied matrix-free.
/// The rows are stored as `scale` times the quadrature-weighted rows, so the
/// Euclidean ball has radius scale·δ_i while residuals are reported in the
/// weighted norm.
struct ConstraintBlock {
    BlockKind kind = BlockKind::PdeResidual;
    std::size_t rows = 0;
    /// out = A_i u (overwrites out)
    std::function<void(std::span<const double> u, std::span<double> out)> apply;
    /// u += A_iᵗ φ
    std::function<void(std::span<const double> phi, std::span<double> u)> adjoint_add;
    std::vector<double> rhs;
    double radius = 0.0;
    double scale = 1.0;

    double ball_radius() const { return radius * scale; }
};

class ConstraintSet {
public:
    ConstraintSet() = default;
    ConstraintSet(std::size_t cols, std::vector<ConstraintBlock> blocks);

    std::size_t cols() const { return cols_; }
    std::size_t total_rows() const { return total_rows_; }
    std::size_t size() const { return blocks_.size(); }
    const ConstraintBlock& block(std::size_t i) const { return blocks_[i]; }
    const std::vector<ConstraintBlock>& blocks() const { return blocks_; }
    std::size_t offset(std::size_t i) const { return offsets_[i]; }

    /// out = A u for all blocks stacked.
    void apply(std::span<const double> u, std::span<double> out) const;
    /// out = Aᵗ φ (overwrites out).
    void adjoint(std::span<const double> phi, std::span<double> out) const;
    /// Weighted residual norms ‖A_i u − b_i‖/scale_i.
    std::vector<double> residual_norms(std::span<const double> u) const;
    std::vector<double> radii() const;

    std::vector<std::string> warnings;

private:
    std::size_t cols_ = 0;
    std::size_t total_rows_ = 0;
    std::vector<ConstraintBlock> blocks_;
    std::vector<std::size_t> offsets_;
};

struct RelaxationPolicy {
    enum class Mode { Explicit, ScaledToGrid };
    Mode mode = Mode::ScaledToGrid;
    /// Explicit radii; a single value is broadcast to every block.
    std::vector<double> values;
    double c1 = 1.0;
    double c2 = 1.0;

    static RelaxationPolicy scaled(double c1 = 1.0, double c2 = 1.0);
    static RelaxationPolicy explicit_radii(std::vector<double> v);

    std::vector<double> radii(const GridSpec& grid, std::size_t num_blocks) const;
};

std::string to_string(RelaxationPolicy::Mode m);

ConstraintSet assemble_geodesic(const GridSpec& grid, std::span<const double> rho0, std::span<const double> rho1,
                                const RelaxationPolicy& policy);
ConstraintSet assemble_flow(const GridSpec& grid, std::span<const double> rho0, const RelaxationPolicy& policy);

/// Mass difference tolerated by the mass and target blocks before the problem becomes infeasible.
double mass_gap_tolerance(const GridSpec& grid, double delta3, double delta5);

struct OpNormEstimate {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Power iteration for λ_max(AAᵗ) = λ_max(AᵗA).
OpNormEstimate estimate_opnorm(const ConstraintSet& set, double tol = 1e-8, int max_iter = 2000,
                               std::uint64_t seed = 0x5eed5eedULL);

}  // namespace wgf
