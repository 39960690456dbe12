#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace obsflow {

using cplx = std::complex<double>;

/// Deterministic pairwise reduction. Fixed association order, so results are
/// bit-identical no matter how callers partition work.
cplx pairwise_sum(std::span<const cplx> v);
double pairwise_sum(std::span<const double> v);

// ---------------------------------------------------------------------------
// UniformGrid
// ---------------------------------------------------------------------------

/// Uniform cell-centered grid on [-L,L]^m with n cells per axis (n even).
/// Cell centers sit at -L + (j+1/2)h; cell corners at -L + j*h. The corner
/// lattice is closed under differences, which the twisted-convolution code
/// relies on.
struct UniformGrid {
    int dim = 0;
    double half_extent = 0.0;
    int points_per_axis = 0;

    double spacing() const { return 2.0 * half_extent / points_per_axis; }
    double cell_volume() const;
    std::int64_t total_cells() const;

    double center_coord(int j) const { return -half_extent + (j + 0.5) * spacing(); }
    double corner_coord(int j) const { return -half_extent + j * spacing(); }

    // row-major index <-> per-axis indices
    std::int64_t flat_index(std::span<const int> idx) const;
    std::vector<int> unflatten(std::int64_t flat) const;

    bool operator==(const UniformGrid& o) const = default;
};

UniformGrid make_uniform_grid(int dim, double half_extent, int points_per_axis);

// ---------------------------------------------------------------------------
// GridFunction
// ---------------------------------------------------------------------------

/// Complex samples on a UniformGrid, one value per cell, row-major.
struct GridFunction {
    UniformGrid grid;
    std::vector<cplx> values;

    GridFunction() = default;
    explicit GridFunction(const UniformGrid& g) : grid(g), values(g.total_cells(), cplx(0.0)) {}

    cplx& operator[](std::int64_t i) { return values[std::size_t(i)]; }
    const cplx& operator[](std::int64_t i) const { return values[std::size_t(i)]; }
    std::int64_t size() const { return std::int64_t(values.size()); }
};

/// Sample an analytic function of the cell-center coordinates.
GridFunction sample_on_grid(const UniformGrid& g,
                            const std::function<cplx(std::span<const double>)>& f);

/// Riemann inner product <f,g> = sum f conj(g) * cellvol, pairwise-reduced.
cplx inner_product(const GridFunction& f, const GridFunction& g);
double norm(const GridFunction& f);
double norm_sq(const GridFunction& f);

GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator*(cplx s, const GridFunction& a);

// ---------------------------------------------------------------------------
// QuadratureRule
// ---------------------------------------------------------------------------

/// Nodes/weights for integrals of p(x)*exp(-x^2); exact through degree `order`.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

/// Gauss-Hermite rule by Golub-Welsch, 1 <= n <= 200.
QuadratureRule gauss_hermite_rule(int n);

// ---------------------------------------------------------------------------
// IndicatorSet
// ---------------------------------------------------------------------------

/// Rasterized finite-measure set. Measures are exact pixel arithmetic
/// (cell count times cell volume), never accumulated in floating point.
struct IndicatorSet {
    UniformGrid grid;
    std::vector<std::uint8_t> mask;

    IndicatorSet() = default;
    explicit IndicatorSet(const UniformGrid& g) : grid(g), mask(g.total_cells(), 0) {}

    std::int64_t count() const;
    double measure() const { return double(count()) * grid.cell_volume(); }
    bool contains(std::int64_t flat) const { return mask[std::size_t(flat)] != 0; }

    IndicatorSet complement() const;
    IndicatorSet set_union(const IndicatorSet& o) const;
    IndicatorSet set_intersection(const IndicatorSet& o) const;
    bool subset_of(const IndicatorSet& o) const;
    bool disjoint_from(const IndicatorSet& o) const;

    /// Shift by whole cells; error if any set pixel would leave the window.
    IndicatorSet translated(std::span<const int> cell_offset) const;
};

/// Geometric description for rasterization. Union takes any number of parts;
/// Complement is taken within the grid window.
struct BoxShape { std::vector<double> lo, hi; };
struct BallShape { std::vector<double> center; double radius = 0.0; };
struct ShapeSpec;
struct UnionShape { std::vector<ShapeSpec> parts; };
struct ComplementShape { std::vector<ShapeSpec> of; };  // single element
struct ShapeSpec {
    std::variant<BoxShape, BallShape, UnionShape, ComplementShape> node;
};

ShapeSpec box_shape(std::vector<double> lo, std::vector<double> hi);
ShapeSpec ball_shape(std::vector<double> center, double radius);
ShapeSpec union_shape(std::vector<ShapeSpec> parts);
ShapeSpec complement_shape(ShapeSpec inner);

/// Mask true exactly on cells whose center lies in the shape.
/// Errors: shape sticking out of the window, or empty rasterization
/// (sets are assumed to have positive measure).
IndicatorSet rasterize_set(const ShapeSpec& shape, const UniformGrid& grid);

/// Pointwise mask multiply: returns 1_S f (or 1_{S^c} f).
GridFunction masked(const GridFunction& f, const IndicatorSet& s, bool complement = false);
double masked_norm_sq(const GridFunction& f, const IndicatorSet& s, bool complement = false);

}  // namespace obsflow
