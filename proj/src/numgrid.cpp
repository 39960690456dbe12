#include "obsflow/numgrid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace obsflow {

namespace {

template <typename T>
T pairwise_sum_impl(std::span<const T> v) {
    if (v.size() <= 32) {
        T acc{};
        for (const T& x : v) acc += x;
        return acc;
    }
    std::size_t half = v.size() / 2;
    return pairwise_sum_impl(v.subspan(0, half)) + pairwise_sum_impl(v.subspan(half));
}

}  // namespace

cplx pairwise_sum(std::span<const cplx> v) { return pairwise_sum_impl(v); }
double pairwise_sum(std::span<const double> v) { return pairwise_sum_impl(v); }

// ---------------------------------------------------------------------------
// UniformGrid
// ---------------------------------------------------------------------------

double UniformGrid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= spacing();
    return v;
}

std::int64_t UniformGrid::total_cells() const {
    std::int64_t c = 1;
    for (int a = 0; a < dim; ++a) c *= points_per_axis;
    return c;
}

std::int64_t UniformGrid::flat_index(std::span<const int> idx) const {
    std::int64_t f = 0;
    for (int a = 0; a < dim; ++a) f = f * points_per_axis + idx[std::size_t(a)];
    return f;
}

std::vector<int> UniformGrid::unflatten(std::int64_t flat) const {
    std::vector<int> idx(static_cast<std::size_t>(dim));
    for (int a = dim - 1; a >= 0; --a) {
        idx[std::size_t(a)] = int(flat % points_per_axis);
        flat /= points_per_axis;
    }
    return idx;
}

UniformGrid make_uniform_grid(int dim, double half_extent, int points_per_axis) {
    if (dim < 1) throw std::invalid_argument("make_uniform_grid: dim must be >= 1");
    if (!(half_extent > 0.0)) throw std::invalid_argument("make_uniform_grid: half_extent must be > 0");
    if (points_per_axis < 4 || points_per_axis % 2 != 0)
        throw std::invalid_argument("make_uniform_grid: points_per_axis must be even and >= 4");
    return UniformGrid{dim, half_extent, points_per_axis};
}

// ---------------------------------------------------------------------------
// GridFunction
// ---------------------------------------------------------------------------

GridFunction sample_on_grid(const UniformGrid& g,
                            const std::function<cplx(std::span<const double>)>& f) {
    GridFunction out(g);
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::vector<double> x(static_cast<std::size_t>(g.dim));
    const std::int64_t total = g.total_cells();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        for (int a = 0; a < g.dim; ++a) x[std::size_t(a)] = g.center_coord(idx[std::size_t(a)]);
        out[flat] = f(x);
        for (int a = g.dim - 1; a >= 0; --a) {
            if (++idx[std::size_t(a)] < g.points_per_axis) break;
            idx[std::size_t(a)] = 0;
        }
    }
    return out;
}

cplx inner_product(const GridFunction& f, const GridFunction& g) {
    if (!(f.grid == g.grid)) throw std::invalid_argument("inner_product: grid mismatch");
    std::vector<cplx> terms(f.values.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = f.values[i] * std::conj(g.values[i]);
    return pairwise_sum(std::span<const cplx>(terms)) * f.grid.cell_volume();
}

double norm_sq(const GridFunction& f) {
    std::vector<double> terms(f.values.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = std::norm(f.values[i]);
    return pairwise_sum(std::span<const double>(terms)) * f.grid.cell_volume();
}

double norm(const GridFunction& f) { return std::sqrt(norm_sq(f)); }

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("GridFunction +: grid mismatch");
    GridFunction out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    return out;
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("GridFunction -: grid mismatch");
    GridFunction out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
    return out;
}

GridFunction operator*(cplx s, const GridFunction& a) {
    GridFunction out = a;
    for (auto& v : out.values) v *= s;
    return out;
}

// ---------------------------------------------------------------------------
// Gauss-Hermite rule
// ---------------------------------------------------------------------------

QuadratureRule gauss_hermite_rule(int n) {
    if (n < 1 || n > 200) throw std::invalid_argument("gauss_hermite_rule: n out of range [1,200]");
    QuadratureRule rule;
    rule.order = 2 * n - 1;
    if (n == 1) {
        rule.nodes = {0.0};
        rule.weights = {std::sqrt(M_PI)};
        return rule;
    }
    // Golub-Welsch: Jacobi matrix for physicists' Hermite, off-diagonal sqrt(k/2).
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        double b = std::sqrt(k / 2.0);
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Nodes from the Jacobi matrix; weights through the Christoffel
        // function 1/sum_k p_k(x)^2 over the orthonormal polynomials. The
        // usual eigenvector-component formula loses all relative accuracy at
        // the extreme nodes, where the components underflow.
        const double x = es.eigenvalues()(i);
        rule.nodes[std::size_t(i)] = x;
        double pkm1 = std::pow(M_PI, -0.25);
        double pk = std::sqrt(2.0) * x * pkm1;
        double s = pkm1 * pkm1 + pk * pk;
        for (int k = 1; k < n - 1; ++k) {
            double pk1 = x * std::sqrt(2.0 / (k + 1.0)) * pk - std::sqrt(k / (k + 1.0)) * pkm1;
            pkm1 = pk;
            pk = pk1;
            s += pk * pk;
        }
        rule.weights[std::size_t(i)] = 1.0 / s;
    }
    return rule;
}

// ---------------------------------------------------------------------------
// IndicatorSet
// ---------------------------------------------------------------------------

std::int64_t IndicatorSet::count() const {
    std::int64_t c = 0;
    for (auto b : mask) c += b ? 1 : 0;
    return c;
}

IndicatorSet IndicatorSet::complement() const {
    IndicatorSet out(grid);
    for (std::size_t i = 0; i < mask.size(); ++i) out.mask[i] = mask[i] ? 0 : 1;
    return out;
}

IndicatorSet IndicatorSet::set_union(const IndicatorSet& o) const {
    if (!(grid == o.grid)) throw std::invalid_argument("IndicatorSet union: grid mismatch");
    IndicatorSet out(grid);
    for (std::size_t i = 0; i < mask.size(); ++i) out.mask[i] = (mask[i] || o.mask[i]) ? 1 : 0;
    return out;
}

IndicatorSet IndicatorSet::set_intersection(const IndicatorSet& o) const {
    if (!(grid == o.grid)) throw std::invalid_argument("IndicatorSet intersection: grid mismatch");
    IndicatorSet out(grid);
    for (std::size_t i = 0; i < mask.size(); ++i) out.mask[i] = (mask[i] && o.mask[i]) ? 1 : 0;
    return out;
}

bool IndicatorSet::subset_of(const IndicatorSet& o) const {
    if (!(grid == o.grid)) throw std::invalid_argument("IndicatorSet subset: grid mismatch");
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i] && !o.mask[i]) return false;
    return true;
}

bool IndicatorSet::disjoint_from(const IndicatorSet& o) const {
    if (!(grid == o.grid)) throw std::invalid_argument("IndicatorSet disjoint: grid mismatch");
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i] && o.mask[i]) return false;
    return true;
}

IndicatorSet IndicatorSet::translated(std::span<const int> cell_offset) const {
    if (int(cell_offset.size()) != grid.dim)
        throw std::invalid_argument("IndicatorSet::translated: offset dimension mismatch");
    IndicatorSet out(grid);
    const std::int64_t total = grid.total_cells();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        if (!mask[std::size_t(flat)]) continue;
        auto idx = grid.unflatten(flat);
        bool inside = true;
        for (int a = 0; a < grid.dim; ++a) {
            idx[std::size_t(a)] += cell_offset[std::size_t(a)];
            if (idx[std::size_t(a)] < 0 || idx[std::size_t(a)] >= grid.points_per_axis) inside = false;
        }
        if (!inside)
            throw std::domain_error("IndicatorSet::translated: set pixel leaves the window");
        out.mask[std::size_t(grid.flat_index(idx))] = 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shapes and rasterization
// ---------------------------------------------------------------------------

ShapeSpec box_shape(std::vector<double> lo, std::vector<double> hi) {
    return ShapeSpec{BoxShape{std::move(lo), std::move(hi)}};
}
ShapeSpec ball_shape(std::vector<double> center, double radius) {
    return ShapeSpec{BallShape{std::move(center), radius}};
}
ShapeSpec union_shape(std::vector<ShapeSpec> parts) {
    return ShapeSpec{UnionShape{std::move(parts)}};
}
ShapeSpec complement_shape(ShapeSpec inner) {
    ComplementShape c;
    c.of.push_back(std::move(inner));
    return ShapeSpec{std::move(c)};
}

namespace {

bool shape_contains(const ShapeSpec& s, std::span<const double> x);

bool shape_contains_node(const BoxShape& b, std::span<const double> x) {
    for (std::size_t a = 0; a < x.size(); ++a)
        if (x[a] < b.lo[a] || x[a] > b.hi[a]) return false;
    return true;
}

bool shape_contains_node(const BallShape& b, std::span<const double> x) {
    double r2 = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        double d = x[a] - b.center[a];
        r2 += d * d;
    }
    return r2 <= b.radius * b.radius;
}

bool shape_contains_node(const UnionShape& u, std::span<const double> x) {
    for (const auto& p : u.parts)
        if (shape_contains(p, x)) return true;
    return false;
}

bool shape_contains_node(const ComplementShape& c, std::span<const double> x) {
    return !shape_contains(c.of.front(), x);
}

bool shape_contains(const ShapeSpec& s, std::span<const double> x) {
    return std::visit([&](const auto& node) { return shape_contains_node(node, x); }, s.node);
}

// Conservative bound check: box/ball extents against the window. Complements
// are bounded by the window by definition; unions check each part.
void check_within_window(const ShapeSpec& s, const UniformGrid& g) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, BoxShape>) {
                if (int(node.lo.size()) != g.dim || int(node.hi.size()) != g.dim)
                    throw std::invalid_argument("rasterize_set: box dimension mismatch");
                for (int a = 0; a < g.dim; ++a)
                    if (node.lo[std::size_t(a)] < -g.half_extent || node.hi[std::size_t(a)] > g.half_extent)
                        throw std::domain_error("rasterize_set: shape exceeds grid window");
            } else if constexpr (std::is_same_v<T, BallShape>) {
                if (int(node.center.size()) != g.dim)
                    throw std::invalid_argument("rasterize_set: ball dimension mismatch");
                for (int a = 0; a < g.dim; ++a)
                    if (node.center[std::size_t(a)] - node.radius < -g.half_extent ||
                        node.center[std::size_t(a)] + node.radius > g.half_extent)
                        throw std::domain_error("rasterize_set: shape exceeds grid window");
            } else if constexpr (std::is_same_v<T, UnionShape>) {
                for (const auto& p : node.parts) check_within_window(p, g);
            } else {
                check_within_window(node.of.front(), g);
            }
        },
        s.node);
}

}  // namespace

IndicatorSet rasterize_set(const ShapeSpec& shape, const UniformGrid& grid) {
    check_within_window(shape, grid);
    IndicatorSet out(grid);
    std::vector<int> idx(static_cast<std::size_t>(grid.dim), 0);
    std::vector<double> x(static_cast<std::size_t>(grid.dim));
    const std::int64_t total = grid.total_cells();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        for (int a = 0; a < grid.dim; ++a) x[std::size_t(a)] = grid.center_coord(idx[std::size_t(a)]);
        if (shape_contains(shape, x)) out.mask[std::size_t(flat)] = 1;
        for (int a = grid.dim - 1; a >= 0; --a) {
            if (++idx[std::size_t(a)] < grid.points_per_axis) break;
            idx[std::size_t(a)] = 0;
        }
    }
    if (out.count() == 0)
        throw std::domain_error("rasterize_set: empty rasterization (sets must have positive measure)");
    return out;
}

GridFunction masked(const GridFunction& f, const IndicatorSet& s, bool complement) {
    if (!(f.grid == s.grid)) throw std::invalid_argument("masked: grid mismatch");
    GridFunction out = f;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        bool keep = complement ? !s.mask[i] : bool(s.mask[i]);
        if (!keep) out.values[i] = cplx(0.0);
    }
    return out;
}

double masked_norm_sq(const GridFunction& f, const IndicatorSet& s, bool complement) {
    if (!(f.grid == s.grid)) throw std::invalid_argument("masked_norm_sq: grid mismatch");
    std::vector<double> terms(f.values.size(), 0.0);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        bool keep = complement ? !s.mask[i] : bool(s.mask[i]);
        if (keep) terms[i] = std::norm(f.values[i]);
    }
    return pairwise_sum(std::span<const double>(terms)) * f.grid.cell_volume();
}

}  // namespace obsflow
