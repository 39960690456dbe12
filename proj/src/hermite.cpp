#include "obsflow/hermite.hpp"

#include <algorithm>
#include <cmath>

namespace obsflow {

namespace {
constexpr int kMaxDegree = 200;
}

int MultiIndex::degree() const {
    int s = 0;
    for (int e : entries) s += e;
    return s;
}

std::vector<MultiIndex> enumerate_multi_indices(int dim, int cutoff) {
    std::vector<MultiIndex> out;
    std::vector<int> cur(static_cast<std::size_t>(dim), 0);
    // graded: by total degree; within a degree, lexicographic
    for (int deg = 0; deg <= cutoff; ++deg) {
        std::function<void(int, int)> rec = [&](int axis, int remaining) {
            if (axis == dim - 1) {
                cur[std::size_t(axis)] = remaining;
                out.push_back(MultiIndex{cur});
                return;
            }
            for (int v = remaining; v >= 0; --v) {
                cur[std::size_t(axis)] = v;
                rec(axis + 1, remaining - v);
            }
        };
        rec(0, deg);
    }
    return out;
}

std::int64_t multi_index_count(int dim, int cutoff) {
    // binomial(cutoff + dim, dim)
    std::int64_t c = 1;
    for (int i = 1; i <= dim; ++i) c = c * (cutoff + i) / i;
    return c;
}

std::vector<double> hermite_values_1d(int kmax, double x) {
    if (kmax < 0 || kmax > kMaxDegree)
        throw std::invalid_argument("hermite_values_1d: degree outside stability bound");
    std::vector<double> h(static_cast<std::size_t>(kmax) + 1);
    h[0] = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
    if (kmax == 0) return h;
    h[1] = std::sqrt(2.0) * x * h[0];
    for (int k = 1; k < kmax; ++k)
        h[std::size_t(k) + 1] =
            x * std::sqrt(2.0 / (k + 1.0)) * h[std::size_t(k)] -
            std::sqrt(k / (k + 1.0)) * h[std::size_t(k) - 1];
    return h;
}

std::vector<double> hermite_poly_part_1d(int kmax, double x) {
    if (kmax < 0 || kmax > kMaxDegree)
        throw std::invalid_argument("hermite_poly_part_1d: degree outside stability bound");
    std::vector<double> h(static_cast<std::size_t>(kmax) + 1);
    h[0] = std::pow(M_PI, -0.25);
    if (kmax == 0) return h;
    h[1] = std::sqrt(2.0) * x * h[0];
    for (int k = 1; k < kmax; ++k)
        h[std::size_t(k) + 1] =
            x * std::sqrt(2.0 / (k + 1.0)) * h[std::size_t(k)] -
            std::sqrt(k / (k + 1.0)) * h[std::size_t(k) - 1];
    return h;
}

double hermite_eval(const MultiIndex& nu, double lambda, std::span<const double> x) {
    if (lambda == 0.0) throw std::invalid_argument("hermite_eval: lambda must be nonzero");
    if (nu.entries.size() != x.size()) throw std::invalid_argument("hermite_eval: dimension mismatch");
    const double rt = std::sqrt(std::abs(lambda));
    double v = 1.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        int k = nu.entries[a];
        auto h = hermite_values_1d(k, rt * x[a]);
        v *= std::sqrt(rt) * h[std::size_t(k)];
    }
    return v;
}

double HermiteExpansion::l2_norm() const {
    std::vector<double> terms(coeffs.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = std::norm(coeffs[i]);
    return std::sqrt(pairwise_sum(std::span<const double>(terms)));
}

double required_half_extent(int cutoff, double lambda) {
    const double al = std::abs(lambda);
    return std::sqrt((2.0 * cutoff + 1.0) / al) + 4.0 / std::sqrt(al);
}

void check_grid_adequate(const UniformGrid& grid, int cutoff, double lambda) {
    if (lambda == 0.0) throw std::invalid_argument("hermite: lambda must be nonzero");
    if (cutoff < 0 || cutoff > kMaxDegree)
        throw std::invalid_argument("hermite: cutoff outside stability bound");
    if (grid.half_extent < required_half_extent(cutoff, lambda))
        throw std::domain_error("hermite: grid too small for the cutoff (aliasing risk)");
}

std::vector<std::vector<double>> hermite_basis_table(const UniformGrid& grid, int cutoff,
                                                     double lambda) {
    const double rt = std::sqrt(std::abs(lambda));
    const double axis_scale = std::sqrt(rt);  // |lambda|^{1/4} per axis
    std::vector<std::vector<double>> table(static_cast<std::size_t>(cutoff) + 1,
                                           std::vector<double>(static_cast<std::size_t>(grid.points_per_axis)));
    for (int j = 0; j < grid.points_per_axis; ++j) {
        auto h = hermite_values_1d(cutoff, rt * grid.center_coord(j));
        for (int k = 0; k <= cutoff; ++k) table[std::size_t(k)][std::size_t(j)] = axis_scale * h[std::size_t(k)];
    }
    return table;
}

HermiteExpansion analyze(const GridFunction& f, double lambda, int cutoff) {
    check_grid_adequate(f.grid, cutoff, lambda);
    const auto& g = f.grid;
    const auto table = hermite_basis_table(g, cutoff, lambda);
    const auto indices = enumerate_multi_indices(g.dim, cutoff);
    HermiteExpansion out;
    out.dim = g.dim;
    out.lambda = lambda;
    out.cutoff = cutoff;
    out.coeffs.resize(indices.size());

    const double vol = g.cell_volume();
    const int n = g.points_per_axis;

    if (g.dim == 1) {
        std::vector<cplx> terms(static_cast<std::size_t>(n));
        for (std::size_t q = 0; q < indices.size(); ++q) {
            const auto& row = table[std::size_t(indices[q].entries[0])];
            for (int j = 0; j < n; ++j) terms[std::size_t(j)] = f[j] * row[std::size_t(j)];
            out.coeffs[q] = pairwise_sum(std::span<const cplx>(terms)) * vol;
        }
        return out;
    }
    if (g.dim == 2) {
        // partial contraction along axis 0, then axis 1
        std::vector<std::vector<cplx>> partial(static_cast<std::size_t>(cutoff) + 1,
                                               std::vector<cplx>(static_cast<std::size_t>(n)));
        std::vector<cplx> terms(static_cast<std::size_t>(n));
        for (int k = 0; k <= cutoff; ++k) {
            for (int j2 = 0; j2 < n; ++j2) {
                for (int j1 = 0; j1 < n; ++j1)
                    terms[std::size_t(j1)] = f[std::int64_t(j1) * n + j2] * table[std::size_t(k)][std::size_t(j1)];
                partial[std::size_t(k)][std::size_t(j2)] = pairwise_sum(std::span<const cplx>(terms));
            }
        }
        for (std::size_t q = 0; q < indices.size(); ++q) {
            int k1 = indices[q].entries[0], k2 = indices[q].entries[1];
            for (int j2 = 0; j2 < n; ++j2)
                terms[std::size_t(j2)] = partial[std::size_t(k1)][std::size_t(j2)] * table[std::size_t(k2)][std::size_t(j2)];
            out.coeffs[q] = pairwise_sum(std::span<const cplx>(terms)) * vol;
        }
        return out;
    }
    // general dimension, direct per-index contraction
    std::vector<cplx> terms(static_cast<std::size_t>(g.total_cells()));
    for (std::size_t q = 0; q < indices.size(); ++q) {
        std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
        for (std::int64_t flat = 0; flat < g.total_cells(); ++flat) {
            double b = 1.0;
            for (int a = 0; a < g.dim; ++a)
                b *= table[std::size_t(indices[q].entries[std::size_t(a)])][std::size_t(idx[std::size_t(a)])];
            terms[std::size_t(flat)] = f[flat] * b;
            for (int a = g.dim - 1; a >= 0; --a) {
                if (++idx[std::size_t(a)] < n) break;
                idx[std::size_t(a)] = 0;
            }
        }
        out.coeffs[q] = pairwise_sum(std::span<const cplx>(terms)) * vol;
    }
    return out;
}

GridFunction synthesize(const HermiteExpansion& c, const UniformGrid& grid) {
    if (grid.dim != c.dim) throw std::invalid_argument("synthesize: dimension mismatch");
    check_grid_adequate(grid, c.cutoff, c.lambda);
    const auto table = hermite_basis_table(grid, c.cutoff, c.lambda);
    const auto indices = enumerate_multi_indices(c.dim, c.cutoff);
    if (indices.size() != c.coeffs.size())
        throw std::invalid_argument("synthesize: coefficient count does not match cutoff");
    GridFunction out(grid);
    const int n = grid.points_per_axis;

    if (grid.dim == 1) {
        for (std::size_t q = 0; q < indices.size(); ++q) {
            const auto& row = table[std::size_t(indices[q].entries[0])];
            for (int j = 0; j < n; ++j) out[j] += c.coeffs[q] * row[std::size_t(j)];
        }
        return out;
    }
    if (grid.dim == 2) {
        // accumulate per k1 a row of coefficients against axis-1 basis
        std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(c.cutoff) + 1,
                                            std::vector<cplx>(static_cast<std::size_t>(n), cplx(0.0)));
        for (std::size_t q = 0; q < indices.size(); ++q) {
            int k1 = indices[q].entries[0], k2 = indices[q].entries[1];
            for (int j2 = 0; j2 < n; ++j2)
                rows[std::size_t(k1)][std::size_t(j2)] += c.coeffs[q] * table[std::size_t(k2)][std::size_t(j2)];
        }
        for (int k1 = 0; k1 <= c.cutoff; ++k1)
            for (int j1 = 0; j1 < n; ++j1) {
                double b = table[std::size_t(k1)][std::size_t(j1)];
                if (b == 0.0) continue;
                for (int j2 = 0; j2 < n; ++j2) out[std::int64_t(j1) * n + j2] += rows[std::size_t(k1)][std::size_t(j2)] * b;
            }
        return out;
    }
    std::vector<int> idx(static_cast<std::size_t>(grid.dim), 0);
    for (std::int64_t flat = 0; flat < grid.total_cells(); ++flat) {
        cplx acc(0.0);
        for (std::size_t q = 0; q < indices.size(); ++q) {
            double b = 1.0;
            for (int a = 0; a < grid.dim; ++a)
                b *= table[std::size_t(indices[q].entries[std::size_t(a)])][std::size_t(idx[std::size_t(a)])];
            acc += c.coeffs[q] * b;
        }
        out[flat] = acc;
        for (int a = grid.dim - 1; a >= 0; --a) {
            if (++idx[std::size_t(a)] < n) break;
            idx[std::size_t(a)] = 0;
        }
    }
    return out;
}

GridFunction project_eigenspace(const GridFunction& f, int k, double lambda) {
    auto c = analyze(f, lambda, k);
    // zero out everything below degree k, keep the top shell
    const auto indices = enumerate_multi_indices(f.grid.dim, k);
    for (std::size_t q = 0; q < indices.size(); ++q)
        if (indices[q].degree() != k) c.coeffs[q] = cplx(0.0);
    return synthesize(c, f.grid);
}

}  // namespace obsflow
