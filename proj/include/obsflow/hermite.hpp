#pragma once

#include "obsflow/numgrid.hpp"

namespace obsflow {

// ---------------------------------------------------------------------------
// Multi-indices
// ---------------------------------------------------------------------------

struct MultiIndex {
    std::vector<int> entries;

    int degree() const;
    bool operator==(const MultiIndex& o) const = default;
};

/// All multi-indices of dimension d with degree <= cutoff, in graded
/// lexicographic order. This is the coefficient layout everywhere.
std::vector<MultiIndex> enumerate_multi_indices(int dim, int cutoff);
std::int64_t multi_index_count(int dim, int cutoff);

// ---------------------------------------------------------------------------
// 1-d evaluation
// ---------------------------------------------------------------------------

/// Values of the orthonormal Hermite functions h_0..h_kmax at x, by the
/// normalized three-term recurrence seeded with pi^{-1/4} exp(-x^2/2).
/// Stable to degree ~200.
std::vector<double> hermite_values_1d(int kmax, double x);

/// Same recurrence without the Gaussian seed factor, i.e. h_k(x) exp(x^2/2).
/// Used with Gauss-Hermite weights so nothing overflows.
std::vector<double> hermite_poly_part_1d(int kmax, double x);

/// Scaled Hermite function at a point: |lambda|^{d/4} times the tensor
/// product of 1-d functions at sqrt(|lambda|) x.
double hermite_eval(const MultiIndex& nu, double lambda, std::span<const double> x);

// ---------------------------------------------------------------------------
// Expansions
// ---------------------------------------------------------------------------

/// Coefficients against the scaled Hermite basis up to degree `cutoff`,
/// graded-lex order.
struct HermiteExpansion {
    int dim = 0;
    double lambda = 1.0;
    int cutoff = 0;
    std::vector<cplx> coeffs;

    std::int64_t size() const { return std::int64_t(coeffs.size()); }
    double l2_norm() const;
};

/// Heuristic window requirement for resolving degrees <= cutoff:
/// L >= sqrt((2K+1)/|lambda|) + 4/sqrt(|lambda|).
double required_half_extent(int cutoff, double lambda);
void check_grid_adequate(const UniformGrid& grid, int cutoff, double lambda);

/// Per-axis table of scaled 1-d basis values: row k, column j holds
/// |lambda|^{1/4} h_k(sqrt(|lambda|) x_j) at the cell centers.
std::vector<std::vector<double>> hermite_basis_table(const UniformGrid& grid, int cutoff,
                                                     double lambda);

HermiteExpansion analyze(const GridFunction& f, double lambda, int cutoff);
GridFunction synthesize(const HermiteExpansion& c, const UniformGrid& grid);

/// Projection onto the degree-k eigenspace of -Laplacian + lambda^2 |x|^2.
GridFunction project_eigenspace(const GridFunction& f, int k, double lambda);

}  // namespace obsflow
