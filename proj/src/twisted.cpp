#include "obsflow/twisted.hpp"

#include <algorithm>
#include <cmath>

namespace obsflow {

namespace {

void require_complex_grid(const UniformGrid& g, int d, const char* who) {
    if (g.dim != 2 * d)
        throw std::invalid_argument(std::string(who) + ": grid dimension must be 2d");
}

void require_nonresonant(double lambda, double tau, const char* who) {
    if (dist_to_pi_multiples(std::abs(lambda) * std::abs(tau)) <= kResonanceTol)
        throw std::domain_error(std::string(who) +
                                ": lambda*t is an integral multiple of pi (kernel singular)");
}

void support_guard(const GridFunction& f, const char* who, double frac_tol) {
    if (mass_fraction_outside(f, 0.75 * f.grid.half_extent) > frac_tol)
        throw std::domain_error(std::string(who) +
                                ": input mass leaks outside the inner 3/4 window (wrap risk)");
}

// cis table over integer multiples: table[m + max] = exp(i theta m), |m| <= max
std::vector<cplx> cis_table(double theta, std::int64_t max_abs) {
    std::vector<cplx> t(static_cast<std::size_t>(2 * max_abs + 1));
    for (std::int64_t m = -max_abs; m <= max_abs; ++m)
        t[std::size_t(m + max_abs)] = std::polar(1.0, theta * double(m));
    return t;
}

// symplectic form on corner-lattice integer coordinates: for complex axis a,
// Im(z conj(w)) contributes zy_a * wx_a - zx_a * wy_a. Axes 0..d-1 hold the
// real parts, axes d..2d-1 the imaginary parts.
std::int64_t symplectic_int(std::span<const int> zi, std::span<const int> wj, int d, int q) {
    std::int64_t m = 0;
    for (int a = 0; a < d; ++a) {
        std::int64_t zx = zi[std::size_t(a)] - q, zy = zi[std::size_t(a + d)] - q;
        std::int64_t wx = wj[std::size_t(a)] - q, wy = wj[std::size_t(a + d)] - q;
        m += zy * wx - zx * wy;
    }
    return m;
}

}  // namespace

double mass_fraction_outside(const GridFunction& f, double box_half_extent) {
    const auto& g = f.grid;
    double inside = 0.0, total = 0.0;
    const std::int64_t n = g.total_cells();
    for (std::int64_t flat = 0; flat < n; ++flat) {
        auto idx = g.unflatten(flat);
        bool in = true;
        for (int a = 0; a < g.dim; ++a)
            if (std::abs(g.center_coord(idx[std::size_t(a)])) > box_half_extent) in = false;
        double m = std::norm(f[flat]);
        total += m;
        if (in) inside += m;
    }
    if (total == 0.0) return 0.0;
    return (total - inside) / total;
}

cplx twisted_kernel_value(double lambda, double tau, int d, double norm_sq_z) {
    const double s = std::sin(lambda * tau);
    const double cot = std::cos(lambda * tau) / s;
    double amp = std::pow(lambda / s, d) * std::pow(4.0 * M_PI, -d);
    return amp * std::polar(1.0, 0.25 * lambda * cot * norm_sq_z - 0.5 * M_PI * d);
}

double twisted_kernel_modulus(double lambda, double tau, int d) {
    return std::pow(4.0 * M_PI, -d) * std::pow(std::abs(lambda / std::sin(lambda * tau)), d);
}

TwistedKernel schrodinger_kernel(const PropagatorParams& p, const UniformGrid& grid) {
    require_complex_grid(grid, p.d, "schrodinger_kernel");
    if (!p.special_valid())
        throw std::domain_error("schrodinger_kernel: lambda*t in pi Z, kernel does not exist");
    TwistedKernel k;
    k.lambda = p.lambda;
    k.t = p.t;
    k.d = p.d;
    k.normalization = std::pow(4.0 * M_PI, -p.d);
    k.values = GridFunction(grid);
    const std::int64_t total = grid.total_cells();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        auto idx = grid.unflatten(flat);
        double r2 = 0.0;
        for (int a = 0; a < grid.dim; ++a) {
            double x = grid.corner_coord(idx[std::size_t(a)]);
            r2 += x * x;
        }
        k.values[flat] = twisted_kernel_value(p.lambda, p.t, p.d, r2);
    }
    return k;
}

GridFunction twisted_convolve(const GridFunction& g, const GridFunction& h, double lambda) {
    if (!(g.grid == h.grid)) throw std::invalid_argument("twisted_convolve: grid mismatch");
    if (g.grid.dim % 2 != 0)
        throw std::invalid_argument("twisted_convolve: grid dimension must be even (C^d)");
    support_guard(g, "twisted_convolve", 1e-8);
    support_guard(h, "twisted_convolve", 1e-8);

    const auto& grid = g.grid;
    const int n = grid.points_per_axis;
    const int q = n / 2;
    const int d = grid.dim / 2;
    const double hsp = grid.spacing();
    const double vol = grid.cell_volume();
    GridFunction out(grid);

    const std::int64_t mmax = std::int64_t(d) * n * std::int64_t(n) / 2 + 1;
    const auto phase = cis_table(0.5 * lambda * hsp * hsp, mmax);

    if (d == 1) {
        const cplx* gv = g.values.data();
        const cplx* hv = h.values.data();
        for (int i0 = 0; i0 < n; ++i0) {
            const std::int64_t zx = i0 - q;
            for (int i1 = 0; i1 < n; ++i1) {
                const std::int64_t zy = i1 - q;
                cplx acc(0.0);
                for (int j0 = 0; j0 < n; ++j0) {
                    const int k0 = i0 - j0 + q;
                    if (k0 < 0 || k0 >= n) continue;
                    const std::int64_t wx = j0 - q;
                    const int j1_lo = std::max(0, i1 + q - n + 1);
                    const int j1_hi = std::min(n - 1, i1 + q);
                    // m = zy*wx - zx*wy, stepping by -zx as j1 advances
                    std::int64_t m = zy * wx - zx * std::int64_t(j1_lo - q);
                    const cplx* grow = gv + std::int64_t(k0) * n + (i1 - j1_lo + q);
                    const cplx* hrow = hv + std::int64_t(j0) * n + j1_lo;
                    for (int j1 = j1_lo; j1 <= j1_hi; ++j1) {
                        acc += grow[j1_lo - j1] * hrow[j1 - j1_lo] * phase[std::size_t(m + mmax)];
                        m -= zx;
                    }
                }
                out[std::int64_t(i0) * n + i1] = acc * vol;
            }
        }
        return out;
    }

    // general complex dimension (small grids only)
    const std::int64_t total = grid.total_cells();
    std::vector<int> kidx(static_cast<std::size_t>(grid.dim));
    for (std::int64_t i = 0; i < total; ++i) {
        auto zi = grid.unflatten(i);
        cplx acc(0.0);
        for (std::int64_t j = 0; j < total; ++j) {
            auto wj = grid.unflatten(j);
            bool in = true;
            for (int a = 0; a < grid.dim; ++a) {
                kidx[std::size_t(a)] = zi[std::size_t(a)] - wj[std::size_t(a)] + q;
                if (kidx[std::size_t(a)] < 0 || kidx[std::size_t(a)] >= n) in = false;
            }
            if (!in) continue;
            std::int64_t m = symplectic_int(zi, wj, d, q);
            acc += g[grid.flat_index(kidx)] * h[j] * phase[std::size_t(m + mmax)];
        }
        out[i] = acc * vol;
    }
    return out;
}

GridFunction twisted_translate(const GridFunction& g, std::span<const double> w, double lambda) {
    const auto& grid = g.grid;
    if (int(w.size()) != grid.dim)
        throw std::invalid_argument("twisted_translate: dimension mismatch");
    if (grid.dim % 2 != 0)
        throw std::invalid_argument("twisted_translate: grid dimension must be even (C^d)");
    const double hsp = grid.spacing();
    std::vector<int> cells(static_cast<std::size_t>(grid.dim));
    for (int a = 0; a < grid.dim; ++a) {
        double m = w[std::size_t(a)] / hsp;
        double r = std::round(m);
        if (std::abs(m - r) > 1e-9)
            throw std::invalid_argument("twisted_translate: w is not grid-aligned (snap first)");
        cells[std::size_t(a)] = int(r);
    }

    // support escape check
    const int n = grid.points_per_axis;
    double escaped = 0.0, total_mass = 0.0;
    const std::int64_t total = grid.total_cells();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        double m = std::norm(g[flat]);
        total_mass += m;
        auto idx = grid.unflatten(flat);
        for (int a = 0; a < grid.dim; ++a) {
            int t = idx[std::size_t(a)] + cells[std::size_t(a)];
            if (t < 0 || t >= n) {
                escaped += m;
                break;
            }
        }
    }
    if (total_mass > 0.0 && escaped > 1e-12 * total_mass)
        throw std::domain_error("twisted_translate: translated support escapes the window");

    const int d = grid.dim / 2;
    GridFunction out(grid);
    for (std::int64_t flat = 0; flat < total; ++flat) {
        auto idx = grid.unflatten(flat);
        bool in = true;
        std::vector<int> src = idx;
        for (int a = 0; a < grid.dim; ++a) {
            src[std::size_t(a)] -= cells[std::size_t(a)];
            if (src[std::size_t(a)] < 0 || src[std::size_t(a)] >= n) in = false;
        }
        if (!in) continue;
        // phase exp(i lambda/2 Im(w . conj(z))) at the corner point z = W_idx
        double omega = 0.0;
        for (int a = 0; a < d; ++a) {
            double zx = grid.corner_coord(idx[std::size_t(a)]);
            double zy = grid.corner_coord(idx[std::size_t(a + d)]);
            double wx = w[std::size_t(a)];
            double wy = w[std::size_t(a + d)];
            omega += wy * zx - wx * zy;
        }
        out[flat] = std::polar(1.0, 0.5 * lambda * omega) * g[grid.flat_index(src)];
    }
    return out;
}

std::vector<double> snap_to_lattice(const UniformGrid& grid, std::span<const double> w) {
    std::vector<double> out(w.size());
    for (std::size_t a = 0; a < w.size(); ++a)
        out[a] = std::round(w[a] / grid.spacing()) * grid.spacing();
    return out;
}

GridFunction propagate_special_hermite_signed(const GridFunction& u0, double lambda, double tau,
                                              int d) {
    require_complex_grid(u0.grid, d, "propagate_special_hermite");
    require_nonresonant(lambda, tau, "propagate_special_hermite");
    // the streamed kernel form has no wrap path; the softer guard still
    // rejects data parked against the window edge while letting flow
    // intermediates (which spread a little) re-enter the inverse flow
    support_guard(u0, "propagate_special_hermite", 1e-3);

    const auto& grid = u0.grid;
    const int n = grid.points_per_axis;
    const int q = n / 2;
    const double hsp = grid.spacing();
    const double vol = grid.cell_volume();

    const double s = std::sin(lambda * tau);
    const double cot = std::cos(lambda * tau) / s;
    // constant complex amplitude, including the i^{-d} phase and quadrature weight
    const cplx amp = std::pow(lambda / s, d) * std::pow(4.0 * M_PI, -d) *
                     std::polar(1.0, -0.5 * M_PI * d) * vol;

    // kernel chirp by squared lattice distance, symplectic phase by integer table
    const std::int64_t r2max = std::int64_t(2 * d) * (n - 1) * std::int64_t(n - 1);
    std::vector<cplx> chirp(static_cast<std::size_t>(r2max + 1));
    const double theta_r = 0.25 * lambda * cot * hsp * hsp;
    for (std::int64_t r2 = 0; r2 <= r2max; ++r2) chirp[std::size_t(r2)] = std::polar(1.0, theta_r * double(r2));
    const std::int64_t mmax = std::int64_t(d) * n * std::int64_t(n) / 2 + 1;
    const auto phase = cis_table(-0.5 * lambda * hsp * hsp, mmax);

    GridFunction out(grid);

    if (d == 1) {
        const cplx* fv = u0.values.data();
        for (int i0 = 0; i0 < n; ++i0) {
            const std::int64_t zx = i0 - q;
            for (int i1 = 0; i1 < n; ++i1) {
                const std::int64_t zy = i1 - q;
                cplx acc(0.0);
                for (int j0 = 0; j0 < n; ++j0) {
                    const std::int64_t wx = j0 - q;
                    const std::int64_t d0 = std::int64_t(i0 - j0) * (i0 - j0);
                    std::int64_t m = zy * wx + zx * q;  // m = zy*wx - zx*(j1-q) at j1 = 0
                    const cplx* frow = fv + std::int64_t(j0) * n;
                    for (int j1 = 0; j1 < n; ++j1) {
                        const std::int64_t d1 = std::int64_t(i1 - j1) * (i1 - j1);
                        acc += frow[j1] * chirp[std::size_t(d0 + d1)] * phase[std::size_t(m + mmax)];
                        m -= zx;
                    }
                }
                out[std::int64_t(i0) * n + i1] = acc * amp;
            }
        }
        return out;
    }

    const std::int64_t total = grid.total_cells();
    for (std::int64_t i = 0; i < total; ++i) {
        auto zi = grid.unflatten(i);
        cplx acc(0.0);
        for (std::int64_t j = 0; j < total; ++j) {
            auto wj = grid.unflatten(j);
            std::int64_t r2 = 0;
            for (int a = 0; a < grid.dim; ++a) {
                std::int64_t dd = zi[std::size_t(a)] - wj[std::size_t(a)];
                r2 += dd * dd;
            }
            std::int64_t m = symplectic_int(zi, wj, d, q);
            acc += u0[j] * chirp[std::size_t(r2)] * phase[std::size_t(m + mmax)];
        }
        out[i] = acc * amp;
    }
    return out;
}

GridFunction propagate_special_hermite(const GridFunction& u0, const PropagatorParams& p) {
    if (!p.special_valid())
        throw std::domain_error("propagate_special_hermite: resonant time (lambda*t in pi Z)");
    return propagate_special_hermite_signed(u0, p.lambda, p.t, p.d);
}

}  // namespace obsflow
