#include "obsflow/setgeom.hpp"

#include "obsflow/twisted.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

namespace obsflow {

namespace {

std::mutex fftw_mutex;

// Integer cross-correlation counts C(t) = #{ j : A[j] and A0[j - t] } for all
// cell offsets t in [-n, n-1]^m, through zero-padded FFTs, rounded to exact
// counts. Output indexed on the doubled lattice (offset t at index t + n).
std::vector<std::int64_t> correlation_counts(const IndicatorSet& a, const IndicatorSet& a0) {
    if (!(a.grid == a0.grid)) throw std::invalid_argument("overlap: grid mismatch");
    const auto& g = a.grid;
    const int n = g.points_per_axis;
    const int m = g.dim;
    const int nd = 2 * n;
    std::int64_t total = 1;
    for (int i = 0; i < m; ++i) total *= nd;

    std::vector<cplx> fa(static_cast<std::size_t>(total), cplx(0.0)), fb(static_cast<std::size_t>(total), cplx(0.0));
    const std::int64_t cells = g.total_cells();
    for (std::int64_t flat = 0; flat < cells; ++flat) {
        auto idx = g.unflatten(flat);
        std::int64_t pad = 0;
        for (int axis = 0; axis < m; ++axis) pad = pad * nd + idx[std::size_t(axis)];
        if (a.mask[std::size_t(flat)]) fa[std::size_t(pad)] = cplx(1.0);
        if (a0.mask[std::size_t(flat)]) fb[std::size_t(pad)] = cplx(1.0);
    }

    std::vector<int> dims(static_cast<std::size_t>(m), nd);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        fftw_plan pa = fftw_plan_dft(m, dims.data(), reinterpret_cast<fftw_complex*>(fa.data()),
                                     reinterpret_cast<fftw_complex*>(fa.data()), FFTW_FORWARD,
                                     FFTW_ESTIMATE);
        fftw_plan pb = fftw_plan_dft(m, dims.data(), reinterpret_cast<fftw_complex*>(fb.data()),
                                     reinterpret_cast<fftw_complex*>(fb.data()), FFTW_FORWARD,
                                     FFTW_ESTIMATE);
        fftw_execute(pa);
        fftw_execute(pb);
        fftw_destroy_plan(pa);
        fftw_destroy_plan(pb);
    }
    for (std::int64_t i = 0; i < total; ++i)
        fa[std::size_t(i)] *= std::conj(fb[std::size_t(i)]);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        fftw_plan pc = fftw_plan_dft(m, dims.data(), reinterpret_cast<fftw_complex*>(fa.data()),
                                     reinterpret_cast<fftw_complex*>(fa.data()), FFTW_BACKWARD,
                                     FFTW_ESTIMATE);
        fftw_execute(pc);
        fftw_destroy_plan(pc);
    }

    // circular index t mod nd -> doubled-lattice index t + n
    std::vector<std::int64_t> counts(static_cast<std::size_t>(total), 0);
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    const double scale = 1.0 / double(total);
    for (std::int64_t flat = 0; flat < total; ++flat) {
        double val = fa[std::size_t(flat)].real() * scale;
        double r = std::round(val);
        if (std::abs(val - r) > 1e-6)
            throw std::runtime_error("overlap: FFT correlation too far from an integer count");
        // reorder: circular offset c in [0, nd) represents t = c for c < n, t = c - nd otherwise
        std::int64_t out = 0;
        for (int axis = 0; axis < m; ++axis) {
            int c = idx[std::size_t(axis)];
            int t = (c < n) ? c : c - nd;
            out = out * nd + (t + n);
        }
        counts[std::size_t(out)] = std::int64_t(r);
        for (int axis = m - 1; axis >= 0; --axis) {
            if (++idx[std::size_t(axis)] < nd) break;
            idx[std::size_t(axis)] = 0;
        }
    }
    return counts;
}

UniformGrid doubled_grid(const UniformGrid& g) {
    return UniformGrid{g.dim, 2.0 * g.half_extent, 2 * g.points_per_axis};
}

struct OffsetOrder {
    std::vector<std::int64_t> flat;  // doubled-lattice indices sorted by (|t|^2, lex)
};

OffsetOrder sorted_offsets(const UniformGrid& g) {
    const int n = g.points_per_axis;
    const int nd = 2 * n;
    const auto dg = doubled_grid(g);
    std::int64_t total = dg.total_cells();
    OffsetOrder order;
    order.flat.resize(static_cast<std::size_t>(total));
    std::iota(order.flat.begin(), order.flat.end(), 0);
    std::vector<std::int64_t> key(static_cast<std::size_t>(total));
    for (std::int64_t f = 0; f < total; ++f) {
        auto idx = dg.unflatten(f);
        std::int64_t k = 0;
        for (int a = 0; a < g.dim; ++a) {
            std::int64_t t = idx[std::size_t(a)] - n;
            k += t * t;
        }
        key[std::size_t(f)] = k;
    }
    std::stable_sort(order.flat.begin(), order.flat.end(),
                     [&](std::int64_t x, std::int64_t y) { return key[std::size_t(x)] < key[std::size_t(y)]; });
    return order;
}

// bounding box of the set in cell indices, per axis
struct CellBox {
    std::vector<int> lo, hi;
};

CellBox bounding_box(const IndicatorSet& s) {
    const auto& g = s.grid;
    CellBox box;
    box.lo.assign(static_cast<std::size_t>(g.dim), g.points_per_axis);
    box.hi.assign(static_cast<std::size_t>(g.dim), -1);
    for (std::int64_t f = 0; f < g.total_cells(); ++f) {
        if (!s.mask[std::size_t(f)]) continue;
        auto idx = g.unflatten(f);
        for (int a = 0; a < g.dim; ++a) {
            box.lo[std::size_t(a)] = std::min(box.lo[std::size_t(a)], idx[std::size_t(a)]);
            box.hi[std::size_t(a)] = std::max(box.hi[std::size_t(a)], idx[std::size_t(a)]);
        }
    }
    return box;
}

bool translate_stays_inside(const CellBox& box, std::span<const int> t, int n) {
    for (std::size_t a = 0; a < t.size(); ++a) {
        if (box.lo[a] + t[a] < 0) return false;
        if (box.hi[a] + t[a] >= n) return false;
    }
    return true;
}

}  // namespace

std::vector<int> translation_from_doubled_index(const UniformGrid& grid, std::int64_t flat) {
    const auto dg = doubled_grid(grid);
    auto idx = dg.unflatten(flat);
    std::vector<int> t(static_cast<std::size_t>(grid.dim));
    for (int a = 0; a < grid.dim; ++a) t[std::size_t(a)] = idx[std::size_t(a)] - grid.points_per_axis;
    return t;
}

std::int64_t doubled_index_from_translation(const UniformGrid& grid, std::span<const int> offset) {
    const int nd = 2 * grid.points_per_axis;
    std::int64_t f = 0;
    for (int a = 0; a < grid.dim; ++a) {
        int v = offset[std::size_t(a)] + grid.points_per_axis;
        if (v < 0 || v >= nd) throw std::out_of_range("translation outside the doubled lattice");
        f = f * nd + v;
    }
    return f;
}

GridFunction overlap_function(const IndicatorSet& a, const IndicatorSet& a0) {
    const auto counts = correlation_counts(a, a0);
    const double pix = a.grid.cell_volume();
    const double base = a.measure() + a0.measure();
    GridFunction out(doubled_grid(a.grid));
    for (std::size_t i = 0; i < counts.size(); ++i)
        out.values[i] = cplx(base - double(counts[i]) * pix, 0.0);
    return out;
}

std::int64_t overlap_count_direct(const IndicatorSet& a, const IndicatorSet& a0,
                                  std::span<const int> cell_offset) {
    if (!(a.grid == a0.grid)) throw std::invalid_argument("overlap_count_direct: grid mismatch");
    const auto& g = a.grid;
    std::int64_t count = 0;
    for (std::int64_t f = 0; f < g.total_cells(); ++f) {
        if (!a0.mask[std::size_t(f)]) continue;
        auto idx = g.unflatten(f);
        bool inside = true;
        for (int ax = 0; ax < g.dim; ++ax) {
            idx[std::size_t(ax)] += cell_offset[std::size_t(ax)];
            if (idx[std::size_t(ax)] < 0 || idx[std::size_t(ax)] >= g.points_per_axis) inside = false;
        }
        if (inside && a.mask[std::size_t(g.flat_index(idx))]) ++count;
    }
    return count;
}

std::optional<TranslationSearchResult> find_translation(const IndicatorSet& a,
                                                        const IndicatorSet& a0,
                                                        const IndicatorSet& b,
                                                        const IndicatorSet& b0, double eps) {
    if (!(a.grid == a0.grid) || !(a.grid == b.grid) || !(a.grid == b0.grid))
        throw std::invalid_argument("find_translation: grid mismatch");
    if (!a0.subset_of(a) || !b0.subset_of(b))
        throw std::invalid_argument("find_translation: requires A0 within A and B0 within B");
    if (!(eps > 0.0) || !(eps < a0.measure()))
        throw std::invalid_argument("find_translation: eps must lie in (0, |A0|)");

    const auto& g = a.grid;
    const double pix = g.cell_volume();
    const std::int64_t cnt_a = a.count(), cnt_a0 = a0.count();
    const std::int64_t cnt_b = b.count(), cnt_b0 = b0.count();

    const auto ca = correlation_counts(a, a0);
    const auto cb = correlation_counts(b, b0);
    const auto box_a0 = bounding_box(a0);
    const auto box_b0 = bounding_box(b0);
    const auto order = sorted_offsets(g);

    auto growth_a_px = [&](std::int64_t flat) { return cnt_a0 - ca[std::size_t(flat)]; };
    auto growth_b_px = [&](std::int64_t flat) { return cnt_b0 - cb[std::size_t(flat)]; };

    auto admissible = [&](std::int64_t flat, std::vector<int>& t) {
        t = translation_from_doubled_index(g, flat);
        return translate_stays_inside(box_a0, t, g.points_per_axis) &&
               translate_stays_inside(box_b0, t, g.points_per_axis);
    };

    auto make_result = [&](std::int64_t flat, const std::vector<int>& t, bool by_shell) {
        TranslationSearchResult res;
        res.w_cells = t;
        res.w.resize(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) res.w[i] = t[i] * g.spacing();
        res.epsilon = eps;
        res.measure_a_before = double(cnt_a) * pix;
        res.measure_b_before = double(cnt_b) * pix;
        res.measure_a_after = double(cnt_a + growth_a_px(flat)) * pix;
        res.measure_b_after = double(cnt_b + growth_b_px(flat)) * pix;
        const bool grow_a = growth_a_px(flat) > 0;
        const bool grow_b = growth_b_px(flat) > 0;
        res.branch = grow_a && grow_b ? GrowthBranch::Both
                                      : (grow_a ? GrowthBranch::ABranch : GrowthBranch::BBranch);
        res.found_by_level_shell = by_shell;
        // re-verify by direct pixel counting, independently of the FFT path
        std::int64_t da = cnt_a0 - overlap_count_direct(a, a0, t);
        std::int64_t db = cnt_b0 - overlap_count_direct(b, b0, t);
        if (da != growth_a_px(flat) || db != growth_b_px(flat))
            throw std::runtime_error("find_translation: FFT and direct counts disagree");
        return res;
    };

    auto feasible = [&](std::int64_t flat) {
        const std::int64_t da = growth_a_px(flat);
        const std::int64_t db = growth_b_px(flat);
        if (double(da) * pix > eps) return false;
        if (double(db) * pix > eps) return false;
        return da > 0 || db > 0;
    };

    // the lemma's plan: radius where h_A first exceeds |A|+eps
    std::int64_t crossing = -1;
    std::vector<int> t;
    for (std::int64_t flat : order.flat) {
        if (!admissible(flat, t)) continue;
        if (double(growth_a_px(flat)) * pix > eps) {
            crossing = flat;
            break;
        }
    }
    std::int64_t delta_sq = -1;
    if (crossing >= 0) {
        auto tc = translation_from_doubled_index(g, crossing);
        delta_sq = 0;
        for (int v : tc) delta_sq += std::int64_t(v) * v;
    }

    // Case 1: minimal-norm point on the discrete level shell with strict A
    // growth within the budget and soft B
    for (std::int64_t flat : order.flat) {
        if (delta_sq >= 0) {
            auto tt = translation_from_doubled_index(g, flat);
            std::int64_t nsq = 0;
            for (int v : tt) nsq += std::int64_t(v) * v;
            if (nsq > delta_sq) break;
        }
        if (!admissible(flat, t)) continue;
        const std::int64_t da = growth_a_px(flat);
        if (da <= 0 || double(da) * pix > eps) continue;
        if (double(growth_b_px(flat)) * pix > eps) continue;
        return make_result(flat, t, true);
    }

    // Case 2: shrink along the digital ray from the crossing toward 0 until
    // h_B lands inside its budget
    if (crossing >= 0) {
        auto tc = translation_from_doubled_index(g, crossing);
        int kmax = 0;
        for (int v : tc) kmax = std::max(kmax, std::abs(v));
        std::vector<int> prev = tc;
        for (int k = kmax - 1; k >= 1; --k) {
            std::vector<int> tk(tc.size());
            for (std::size_t i = 0; i < tc.size(); ++i)
                tk[i] = int(std::lround(double(tc[i]) * k / kmax));
            if (tk == prev) continue;
            prev = tk;
            std::int64_t flat = doubled_index_from_translation(g, tk);
            std::vector<int> dummy;
            if (!admissible(flat, dummy)) continue;
            const std::int64_t db = growth_b_px(flat);
            if (db <= 0 || double(db) * pix > eps) continue;
            if (double(growth_a_px(flat)) * pix > eps) continue;
            return make_result(flat, tk, true);
        }
    }

    // exhaustive fallback: grid feasibility decided exactly
    for (std::int64_t flat : order.flat) {
        if (!admissible(flat, t)) continue;
        if (feasible(flat)) return make_result(flat, t, false);
    }
    return std::nullopt;
}

ConstructionTrace iterate_construction(const IndicatorSet& e0, const IndicatorSet& omega0,
                                       int budget_exponent, int steps, const GridFunction* f0,
                                       double lambda, double t) {
    if (steps < 0 || steps > 30)
        throw std::invalid_argument("iterate_construction: step count must lie in [0, 30]");
    if (!(e0.grid == omega0.grid))
        throw std::invalid_argument("iterate_construction: grid mismatch");

    ConstructionTrace trace;
    trace.budget_exponent = budget_exponent;
    trace.sets_e.push_back(e0);
    trace.sets_omega.push_back(omega0);

    GridFunction fj;
    GridFunction st_f0;
    int d = 0;
    if (f0 != nullptr) {
        if (e0.grid.dim % 2 != 0)
            throw std::invalid_argument("iterate_construction: probe requires an even-dimensional grid");
        d = e0.grid.dim / 2;
        fj = *f0;
        const double tot = norm_sq(*f0);
        trace.e_leak_baseline = tot > 0 ? masked_norm_sq(*f0, e0, true) / tot : 0.0;
        st_f0 = propagate_special_hermite_signed(*f0, lambda, t, d);
        const double tot2 = norm_sq(st_f0);
        trace.omega_leak_baseline = tot2 > 0 ? masked_norm_sq(st_f0, omega0, true) / tot2 : 0.0;
    }

    for (int j = 1; j <= steps; ++j) {
        const double eps = std::pow(2.0, -double(j + budget_exponent));
        auto found = find_translation(trace.sets_e.back(), e0, trace.sets_omega.back(), omega0, eps);
        if (!found) {
            trace.truncated = true;
            break;
        }
        const auto& res = *found;
        IndicatorSet e_next = trace.sets_e.back().set_union(e0.translated(res.w_cells));
        IndicatorSet o_next = trace.sets_omega.back().set_union(omega0.translated(res.w_cells));

        ConstructionStep step;
        step.w_cells = res.w_cells;
        step.branch = res.branch;
        step.epsilon = eps;
        step.measure_e = e_next.measure();
        step.measure_omega = o_next.measure();

        if (f0 != nullptr) {
            const GridFunction f_j = twisted_translate(*f0, res.w, lambda);
            const IndicatorSet e0_shift = e0.translated(res.w_cells);
            const IndicatorSet o0_shift = omega0.translated(res.w_cells);
            const double tot = norm_sq(f_j);
            const double leak_e = tot > 0 ? masked_norm_sq(f_j, e0_shift, true) / tot : 0.0;
            const GridFunction st_fj = propagate_special_hermite_signed(f_j, lambda, t, d);
            const double tot2 = norm_sq(st_fj);
            const double leak_o = tot2 > 0 ? masked_norm_sq(st_fj, o0_shift, true) / tot2 : 0.0;
            step.e_leak = leak_e;
            step.omega_leak = leak_o;
            step.e_transport_delta = std::abs(leak_e - trace.e_leak_baseline);
            step.omega_transport_delta = std::abs(leak_o - trace.omega_leak_baseline);
        }

        trace.sets_e.push_back(std::move(e_next));
        trace.sets_omega.push_back(std::move(o_next));
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

}  // namespace obsflow
