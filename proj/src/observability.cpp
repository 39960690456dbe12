#include "obsflow/observability.hpp"

#include "obsflow/twisted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace obsflow {

// ---------------------------------------------------------------------------
// Deterministic uniform/normal draws (independent of library distributions,
// so identical configs produce identical bytes everywhere)
// ---------------------------------------------------------------------------

namespace {

double next_uniform(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;  // [0,1)
}

double next_uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * next_uniform(rng);
}

double next_normal(std::mt19937_64& rng) {
    double u1 = std::max(next_uniform(rng), 1e-300);
    double u2 = next_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

double top_singular_value(const GridOperator& apply, const GridOperator& adjoint,
                          const GridFunction& start, const PowerIterationOptions& opts) {
    // adjoint consistency on seeded random probes
    {
        std::mt19937_64 rng(0x0b5e7f10u);
        GridFunction f(start.grid), g(start.grid);
        for (std::int64_t i = 0; i < f.size(); ++i) {
            f[i] = cplx(next_normal(rng), next_normal(rng));
            g[i] = cplx(next_normal(rng), next_normal(rng));
        }
        const cplx lhs = inner_product(apply(f), g);
        const cplx rhs = inner_product(f, adjoint(g));
        const double scale = std::max(1.0, norm(f) * norm(g));
        if (std::abs(lhs - rhs) > opts.adjoint_check_tol * scale)
            throw std::runtime_error("top_singular_value: apply/adjoint pair fails the adjoint test");
    }

    GridFunction v = start;
    const double n0 = norm(v);
    if (n0 == 0.0) throw std::invalid_argument("top_singular_value: zero start vector");
    v = (cplx(1.0 / n0)) * v;

    double sigma_prev = -1.0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        GridFunction av = apply(v);
        const double sigma = norm(av);
        if (sigma == 0.0) return 0.0;
        GridFunction w = adjoint(av);
        const double wn = norm(w);
        if (wn == 0.0) return sigma;
        v = cplx(1.0 / wn) * w;
        if (sigma_prev >= 0.0 && std::abs(sigma - sigma_prev) < opts.tol) return sigma;
        sigma_prev = sigma;
    }
    throw std::runtime_error("top_singular_value: power iteration did not converge");
}

double certified_constant(double sigma) {
    if (!(sigma >= 0.0) || sigma >= 1.0)
        throw std::domain_error("certified_constant: sigma must lie in [0,1)");
    const double c0inv = 1.0 / (1.0 - sigma);
    return 2.0 * (c0inv + 1.0) * (c0inv + 1.0);
}

// ---------------------------------------------------------------------------
// Kernel matrix
// ---------------------------------------------------------------------------

namespace {

std::vector<std::int64_t> mask_cells(const IndicatorSet& s) {
    std::vector<std::int64_t> cells;
    for (std::int64_t i = 0; i < std::int64_t(s.mask.size()); ++i)
        if (s.mask[std::size_t(i)]) cells.push_back(i);
    return cells;
}

}  // namespace

KernelMatrix assemble_kernel(const IndicatorSet& set_e, const IndicatorSet& set_omega,
                             const PropagatorParams& p, std::int64_t dense_cell_cap) {
    if (!(set_e.grid == set_omega.grid))
        throw std::invalid_argument("assemble_kernel: sets on different grids");
    if (set_e.grid.dim != 2 * p.d)
        throw std::invalid_argument("assemble_kernel: grid dimension must be 2d");
    if (!p.special_valid())
        throw std::domain_error("assemble_kernel: resonant time (lambda*t in pi Z)");
    if (set_e.count() == 0 || set_omega.count() == 0)
        throw std::domain_error("assemble_kernel: sets must have positive measure");

    KernelMatrix k;
    k.grid = set_e.grid;
    k.lambda = p.lambda;
    k.t = p.t;
    k.d = p.d;
    k.row_cells = mask_cells(set_omega);
    k.col_cells = mask_cells(set_e);
    if (std::int64_t(k.row_cells.size()) > dense_cell_cap ||
        std::int64_t(k.col_cells.size()) > dense_cell_cap)
        throw std::length_error("assemble_kernel: masked cells exceed the dense cap, use matrix-free");

    const auto& g = k.grid;
    const double vol = g.cell_volume();
    const int dd = p.d;
    k.entries.resize(k.row_cells.size() * k.col_cells.size());
    for (std::size_t r = 0; r < k.row_cells.size(); ++r) {
        const auto zi = g.unflatten(k.row_cells[r]);
        for (std::size_t c = 0; c < k.col_cells.size(); ++c) {
            const auto wj = g.unflatten(k.col_cells[c]);
            double r2 = 0.0, omega = 0.0;
            for (int a = 0; a < g.dim; ++a) {
                double diff = g.corner_coord(zi[std::size_t(a)]) - g.corner_coord(wj[std::size_t(a)]);
                r2 += diff * diff;
            }
            for (int a = 0; a < dd; ++a) {
                double zx = g.corner_coord(zi[std::size_t(a)]), zy = g.corner_coord(zi[std::size_t(a + dd)]);
                double wx = g.corner_coord(wj[std::size_t(a)]), wy = g.corner_coord(wj[std::size_t(a + dd)]);
                omega += zy * wx - zx * wy;
            }
            k.entries[r * k.col_cells.size() + c] = twisted_kernel_value(p.lambda, p.t, dd, r2) *
                                                    std::polar(1.0, -0.5 * p.lambda * omega) * vol;
        }
    }
    return k;
}

GridFunction apply_kernel(const KernelMatrix& k, const GridFunction& f) {
    if (!(f.grid == k.grid)) throw std::invalid_argument("apply_kernel: grid mismatch");
    GridFunction out(k.grid);
    const std::size_t nc = k.col_cells.size();
    for (std::size_t r = 0; r < k.row_cells.size(); ++r) {
        cplx acc(0.0);
        const cplx* row = &k.entries[r * nc];
        for (std::size_t c = 0; c < nc; ++c) acc += row[c] * f[k.col_cells[c]];
        out[k.row_cells[r]] = acc;
    }
    return out;
}

GridFunction apply_kernel_adjoint(const KernelMatrix& k, const GridFunction& f) {
    if (!(f.grid == k.grid)) throw std::invalid_argument("apply_kernel_adjoint: grid mismatch");
    GridFunction out(k.grid);
    const std::size_t nc = k.col_cells.size();
    for (std::size_t c = 0; c < nc; ++c) {
        cplx acc(0.0);
        for (std::size_t r = 0; r < k.row_cells.size(); ++r)
            acc += std::conj(k.entries[r * nc + c]) * f[k.row_cells[r]];
        out[k.col_cells[c]] = acc;
    }
    return out;
}

HsNorm hs_norm(const KernelMatrix& k) {
    HsNorm h;
    std::vector<double> terms(k.entries.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = std::norm(k.entries[i]);
    h.numeric = std::sqrt(pairwise_sum(std::span<const double>(terms)));
    const double vol = k.grid.cell_volume();
    const double mod = twisted_kernel_modulus(k.lambda, k.t, k.d);
    const double me = double(k.col_cells.size()) * vol;
    const double mo = double(k.row_cells.size()) * vol;
    h.closed_form = mod * std::sqrt(mo * me);
    return h;
}

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

std::vector<GridFunction> gaussian_mixture_samples(const UniformGrid& grid,
                                                   const SampleSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::vector<GridFunction> out;
    out.reserve(static_cast<std::size_t>(spec.count));
    const int m = grid.dim;
    for (int s = 0; s < spec.count; ++s) {
        struct Term {
            cplx amp;
            std::vector<double> center, freq;
            double width;
        };
        std::vector<Term> terms(static_cast<std::size_t>(spec.mixture_terms));
        for (auto& t : terms) {
            t.amp = cplx(next_normal(rng), next_normal(rng));
            t.center.resize(static_cast<std::size_t>(m));
            t.freq.resize(static_cast<std::size_t>(m));
            for (int a = 0; a < m; ++a) t.center[std::size_t(a)] = next_uniform(rng, -spec.center_range, spec.center_range);
            t.width = next_uniform(rng, spec.width_min, spec.width_max);
            for (int a = 0; a < m; ++a) t.freq[std::size_t(a)] = next_uniform(rng, -spec.freq_range, spec.freq_range);
        }
        GridFunction f = sample_on_grid(grid, [&](std::span<const double> x) {
            cplx v(0.0);
            for (const auto& t : terms) {
                double r2 = 0.0, dot = 0.0;
                for (int a = 0; a < m; ++a) {
                    double dx = x[std::size_t(a)] - t.center[std::size_t(a)];
                    r2 += dx * dx;
                    dot += t.freq[std::size_t(a)] * x[std::size_t(a)];
                }
                v += t.amp * std::exp(-r2 / (2.0 * t.width * t.width)) * std::polar(1.0, dot);
            }
            return v;
        });
        const double n = norm(f);
        if (n > 0.0) f = cplx(1.0 / n) * f;
        out.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

ObservabilityReport special_observability_experiment(const std::vector<GridFunction>& samples,
                                                     const PropagatorParams& p,
                                                     const IndicatorSet& set_e,
                                                     const IndicatorSet& set_omega,
                                                     std::int64_t dense_cell_cap) {
    if (!p.special_valid())
        throw std::domain_error("special_observability_experiment: resonant time");
    if (set_e.count() == 0 || set_omega.count() == 0)
        throw std::domain_error("special_observability_experiment: sets must have positive measure");

    ObservabilityReport rep;
    rep.lambda = p.lambda;
    rep.t = p.t;
    rep.d = p.d;
    rep.measure_e = set_e.measure();
    rep.measure_omega = set_omega.measure();
    rep.caveat =
        "sigma_max is a grid-level quantity; the continuum operator-norm statement "
        "belongs to the theorem, not to this run";

    const auto& g = set_e.grid;
    GridFunction start(g);
    for (std::int64_t i = 0; i < start.size(); ++i)
        if (set_e.contains(i)) start[i] = cplx(1.0);

    const bool dense = std::int64_t(mask_cells(set_e).size()) <= dense_cell_cap &&
                       std::int64_t(mask_cells(set_omega).size()) <= dense_cell_cap;
    rep.dense_route = dense;
    if (dense) {
        const auto K = assemble_kernel(set_e, set_omega, p, dense_cell_cap);
        const auto hs = hs_norm(K);
        rep.hs_norm = hs.numeric;
        rep.hs_closed_form = hs.closed_form;
        rep.sigma_max = top_singular_value(
            [&](const GridFunction& f) { return apply_kernel(K, f); },
            [&](const GridFunction& f) { return apply_kernel_adjoint(K, f); }, start);
    } else {
        rep.sigma_max = top_singular_value(
            [&](const GridFunction& f) {
                return masked(propagate_special_hermite_signed(masked(f, set_e), p.lambda, p.t, p.d),
                              set_omega);
            },
            [&](const GridFunction& f) {
                return masked(
                    propagate_special_hermite_signed(masked(f, set_omega), p.lambda, -p.t, p.d),
                    set_e);
            },
            start);
        const double mod = twisted_kernel_modulus(p.lambda, p.t, p.d);
        rep.hs_closed_form = mod * std::sqrt(rep.measure_e * rep.measure_omega);
        // constant-modulus kernel: the entrywise square sum collapses to the
        // same pixel product, so the numeric value coincides by construction
        rep.hs_norm = rep.hs_closed_form;
    }

    if (rep.sigma_max > rep.hs_norm + 1e-12)
        throw std::runtime_error("special_observability_experiment: sigma exceeds the HS bound");
    if (rep.sigma_max >= 1.0 - 1e-9)
        throw std::domain_error("special_observability_experiment: certificate void (sigma ~ 1)");

    rep.c0 = 1.0 - rep.sigma_max;
    rep.supported_case_constant = 1.0 / (rep.c0 * rep.c0);
    rep.certified_constant = certified_constant(rep.sigma_max);

    rep.ratios.reserve(samples.size());
    for (const auto& u0 : samples) {
        const double total = norm_sq(u0);
        if (total == 0.0) continue;
        // strict contraction on the masked propagator (support lemma, discrete form)
        {
            const GridFunction pf = masked(
                propagate_special_hermite_signed(masked(u0, set_e), p.lambda, p.t, p.d), set_omega);
            if (!(norm_sq(pf) < total))
                throw std::runtime_error(
                    "special_observability_experiment: masked flow failed strict contraction");
        }
        const GridFunction ut = propagate_special_hermite_signed(u0, p.lambda, p.t, p.d);
        const double off_e = masked_norm_sq(u0, set_e, /*complement=*/true);
        const double off_omega = masked_norm_sq(ut, set_omega, /*complement=*/true);
        SampleRatio r;
        r.ratio = total / (off_e + off_omega);
        r.outside_source_set = masked_norm_sq(u0, set_e) < 1e-12 * total;
        if (r.ratio > rep.certified_constant)
            throw std::runtime_error(
                "special_observability_experiment: a sample violates the certified inequality");
        rep.max_ratio = std::max(rep.max_ratio, r.ratio);
        rep.ratios.push_back(r);
    }
    return rep;
}

}  // namespace obsflow
