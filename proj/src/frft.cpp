#include "obsflow/frft.hpp"

#include "obsflow/observability.hpp"
#include "obsflow/propagator.hpp"

#include <algorithm>
#include <cmath>

namespace obsflow {

double dist_to_pi_multiples(double x) {
    double k = std::round(x / M_PI);
    return std::abs(x - k * M_PI);
}

bool PropagatorParams::hermite_valid() const {
    return dist_to_pi_multiples(2.0 * std::abs(lambda) * t) > kResonanceTol;
}

bool PropagatorParams::special_valid() const {
    return dist_to_pi_multiples(std::abs(lambda) * t) > kResonanceTol;
}

FrftOrder classify_order(double alpha) {
    FrftOrder o;
    o.alpha = alpha;
    if (dist_to_pi_multiples(alpha) > kResonanceTol) {
        o.classification = OrderClass::Generic;
    } else {
        long long k = llround(alpha / M_PI);
        o.classification = (k % 2 == 0) ? OrderClass::EvenPiMultiple : OrderClass::OddPiMultiple;
    }
    return o;
}

ChirpFactors chirp_factors(double alpha) {
    if (classify_order(alpha).classification != OrderClass::Generic)
        throw std::domain_error("chirp_factors: order is a multiple of pi (singular sin)");
    ChirpFactors cf;
    cf.sin_alpha = std::sin(alpha);
    cf.cot_alpha = std::cos(alpha) / cf.sin_alpha;
    cf.c_alpha = std::polar(1.0 / std::sqrt(std::abs(cf.sin_alpha)), 0.5 * (alpha - M_PI_2));
    return cf;
}

// ---------------------------------------------------------------------------
// Spectral route
// ---------------------------------------------------------------------------

HermiteExpansion frft_spectral(const HermiteExpansion& c, double alpha) {
    if (std::abs(c.lambda - 1.0) > 1e-14)
        throw std::invalid_argument(
            "frft_spectral: expansion must use the unit-scale basis (rescale first)");
    HermiteExpansion out = c;
    const auto indices = enumerate_multi_indices(c.dim, c.cutoff);
    for (std::size_t q = 0; q < indices.size(); ++q)
        out.coeffs[q] *= std::polar(1.0, -double(indices[q].degree()) * alpha);
    return out;
}

GridFunction grid_parity(const GridFunction& f) {
    const auto& g = f.grid;
    GridFunction out(g);
    const std::int64_t total = g.total_cells();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        auto idx = g.unflatten(flat);
        for (int a = 0; a < g.dim; ++a) idx[std::size_t(a)] = g.points_per_axis - 1 - idx[std::size_t(a)];
        out[g.flat_index(idx)] = f[flat];
    }
    return out;
}

GridFunction frft_grid(const GridFunction& f, double alpha, int cutoff) {
    const auto order = classify_order(alpha);
    if (order.classification == OrderClass::EvenPiMultiple) return f;
    if (order.classification == OrderClass::OddPiMultiple) return grid_parity(f);
    return synthesize(frft_spectral(analyze(f, 1.0, cutoff), alpha), f.grid);
}

// ---------------------------------------------------------------------------
// Chirp route
// ---------------------------------------------------------------------------

namespace {

// Effective box radius: smallest multiple of h so that at most `frac` of the
// L2 mass lies outside the centered box of that radius.
double effective_radius(const GridFunction& f, double frac = 1e-12) {
    const auto& g = f.grid;
    const int half = g.points_per_axis / 2;
    std::vector<double> shell_mass(static_cast<std::size_t>(half), 0.0);
    const std::int64_t total = g.total_cells();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        auto idx = g.unflatten(flat);
        int shell = 0;
        for (int a = 0; a < g.dim; ++a) {
            int j = idx[std::size_t(a)];
            int s = (j < half) ? (half - 1 - j) : (j - half);
            shell = std::max(shell, s);
        }
        shell_mass[std::size_t(shell)] += std::norm(f[flat]);
    }
    double total_mass = 0.0;
    for (double m : shell_mass) total_mass += m;
    if (total_mass == 0.0) return g.spacing();
    double outside = 0.0;
    for (int s = half - 1; s >= 0; --s) {
        outside += shell_mass[std::size_t(s)];
        if (outside > frac * total_mass) return (s + 1.0) * g.spacing();
    }
    return g.spacing();
}

// One-axis application of the fused chirp transform:
//   out(x_i) = pref * e^{+i a cot x_i^2} sum_j e^{+i a cot x_j^2} in_j e^{-i b x_j x_i / sin} * h
// The chirp sign is fixed by requiring agreement with the spectral route: the
// opposite sign turns the order alpha into pi - alpha, which no global phase
// can repair.
void apply_chirp_axis(const UniformGrid& g, int axis, double a_coef, double b_coef,
                      const ChirpFactors& cf, cplx pref, std::vector<cplx>& values) {
    const int n = g.points_per_axis;
    std::vector<cplx> chirp(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        double x = g.center_coord(j);
        chirp[std::size_t(j)] = std::polar(1.0, a_coef * cf.cot_alpha * x * x);
    }
    std::vector<cplx> mat(static_cast<std::size_t>(n) * std::size_t(n));
    const double h = g.spacing();
    for (int i = 0; i < n; ++i) {
        double xi = g.center_coord(i);
        for (int j = 0; j < n; ++j) {
            double xj = g.center_coord(j);
            mat[std::size_t(i) * n + j] = pref * h * chirp[std::size_t(i)] * chirp[std::size_t(j)] *
                                          std::polar(1.0, -b_coef * xj * xi / cf.sin_alpha);
        }
    }
    // iterate lines along `axis`
    std::int64_t stride = 1;
    for (int a = g.dim - 1; a > axis; --a) stride *= n;
    std::int64_t outer = g.total_cells() / n;
    std::vector<cplx> line(static_cast<std::size_t>(n)), res(static_cast<std::size_t>(n));
    for (std::int64_t o = 0; o < outer; ++o) {
        // decompose o into (before, after) the axis
        std::int64_t after = o % stride;
        std::int64_t before = o / stride;
        std::int64_t base = before * stride * n + after;
        for (int j = 0; j < n; ++j) line[std::size_t(j)] = values[std::size_t(base + j * stride)];
        for (int i = 0; i < n; ++i) {
            cplx acc(0.0);
            const cplx* row = &mat[std::size_t(i) * n];
            for (int j = 0; j < n; ++j) acc += row[std::size_t(j)] * line[std::size_t(j)];
            res[std::size_t(i)] = acc;
        }
        for (int i = 0; i < n; ++i) values[std::size_t(base + i * stride)] = res[std::size_t(i)];
    }
}

GridFunction chirp_route(const GridFunction& f, double alpha, double scale, cplx phase_per_axis) {
    const auto cf = chirp_factors(alpha);
    const auto& g = f.grid;

    const double a_coef = M_PI / (scale * scale);
    const double b_coef = 2.0 * M_PI / (scale * scale);
    const double radius = effective_radius(f);
    const double nyq = 2.0 * M_PI / g.spacing();
    const double needed = b_coef * (g.half_extent / std::abs(cf.sin_alpha) +
                                    (std::abs(cf.cot_alpha) + 1.0) * radius);
    if (needed > nyq)
        throw std::domain_error("frft_chirp: grid band insufficient for the 1/sin stretch (aliasing)");

    GridFunction out = f;
    const cplx pref = cf.c_alpha / (scale * phase_per_axis);
    for (int axis = 0; axis < g.dim; ++axis)
        apply_chirp_axis(g, axis, a_coef, b_coef, cf, pref, out.values);
    return out;
}

GridFunction sample_hermite_basis(const UniformGrid& g, int k) {
    return sample_on_grid(g, [k](std::span<const double> x) {
        MultiIndex nu{std::vector<int>(x.size(), 0)};
        nu.entries[0] = k;
        return cplx(hermite_eval(nu, 1.0, x), 0.0);
    });
}

double second_moment(const GridFunction& f) {
    const auto& g = f.grid;
    double num = 0.0, den = 0.0;
    const std::int64_t total = g.total_cells();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        auto idx = g.unflatten(flat);
        double r2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            double x = g.center_coord(idx[std::size_t(a)]);
            r2 += x * x;
        }
        double m = std::norm(f[flat]);
        num += r2 * m;
        den += m;
    }
    return num / den;
}

}  // namespace

ChirpCalibration calibrate_conventions() {
    ChirpCalibration cal;
    const auto g = make_uniform_grid(1, 8.0, 512);

    // dilation: the raw chirp form pairs with exp(-pi x^2) Gaussians; measure
    // the width mismatch on the ground state at alpha = pi/2 and invert it.
    const auto phi0 = sample_hermite_basis(g, 0);
    const auto raw = chirp_route(phi0, M_PI_2, 1.0, cplx(1.0));
    const double m_in = second_moment(phi0);
    const double m_out = second_moment(raw);
    cal.scale = std::pow(m_in / m_out, 0.25);

    // residual global phase per sign class of sin(alpha) on the principal
    // branch (-pi, pi), measured on the probe basis against the spectral
    // eigenvalue e^{-ik alpha}
    const double alphas_pos[] = {M_PI / 3.0, M_PI_2, 2.0};
    const double alphas_neg[] = {-M_PI / 3.0, -2.0, -0.4};
    bool have_pos = false, have_neg = false;
    for (int k = 0; k <= 2; ++k) {
        const auto phik = sample_hermite_basis(g, k);
        auto probe_at = [&](double alpha, cplx& phase_slot, bool& have) {
            auto got = chirp_route(phik, alpha, cal.scale, cplx(1.0));
            auto ref = std::polar(1.0, -double(k) * alpha) * phik;
            if (!have) {
                cplx ip = inner_product(got, ref);
                phase_slot = ip / std::abs(ip);
                have = true;
            }
            auto corrected = (cplx(1.0) / phase_slot) * got;
            double res = norm(corrected - ref) / norm(ref);
            cal.probe_residuals.push_back(res);
            cal.max_residual = std::max(cal.max_residual, res);
        };
        for (double alpha : alphas_pos) probe_at(alpha, cal.phase_pos, have_pos);
        for (double alpha : alphas_neg) probe_at(alpha, cal.phase_neg, have_neg);
    }
    if (cal.max_residual > 1e-4)
        throw std::runtime_error("calibrate_conventions: residual above 1e-4, convention mismatch");
    return cal;
}

const ChirpCalibration& chirp_calibration() {
    static const ChirpCalibration cal = calibrate_conventions();
    return cal;
}

GridFunction frft_chirp(const GridFunction& f, double alpha) {
    return frft_chirp(f, alpha, chirp_calibration());
}

GridFunction frft_chirp(const GridFunction& f, double alpha, const ChirpCalibration& cal) {
    // The spectral transform is 2pi-periodic in the order while the chirp
    // prefactor c_alpha is not; fold into (-pi, pi] and correct with the
    // per-branch phase measured by the calibration.
    const double folded = alpha - 2.0 * M_PI * std::floor((alpha + M_PI) / (2.0 * M_PI));
    const cplx phase = (std::sin(folded) > 0.0) ? cal.phase_pos : cal.phase_neg;
    return chirp_route(f, folded, cal.scale, phase);
}

// ---------------------------------------------------------------------------
// Certified pair-restriction constant
// ---------------------------------------------------------------------------

FrftCertificate frft_nazarov_certificate(const IndicatorSet& set_alpha,
                                         const IndicatorSet& set_beta, double alpha,
                                         double beta, int cutoff) {
    const double delta = beta - alpha;
    if (classify_order(delta).classification != OrderClass::Generic)
        throw std::domain_error("frft_nazarov_certificate: beta - alpha is a multiple of pi");
    if (set_alpha.count() == 0 || set_beta.count() == 0)
        throw std::domain_error("frft_nazarov_certificate: sets must have positive measure");
    if (!(set_alpha.grid == set_beta.grid))
        throw std::invalid_argument("frft_nazarov_certificate: sets on different grids");

    const auto& g = set_alpha.grid;
    check_grid_adequate(g, cutoff, 1.0);

    GridOperator apply = [&](const GridFunction& v) {
        return masked(frft_grid(masked(v, set_alpha), delta, cutoff), set_beta);
    };
    GridOperator adjoint = [&](const GridFunction& v) {
        return masked(frft_grid(masked(v, set_beta), -delta, cutoff), set_alpha);
    };
    GridFunction start(g);
    for (std::int64_t i = 0; i < start.size(); ++i)
        if (set_alpha.contains(i)) start[i] = cplx(1.0);

    FrftCertificate cert;
    cert.delta = delta;
    cert.measure_a = set_alpha.measure();
    cert.measure_b = set_beta.measure();
    cert.sigma = top_singular_value(apply, adjoint, start);
    if (cert.sigma >= 1.0 - 1e-9)
        throw std::domain_error("frft_nazarov_certificate: certificate void at this discretization");
    cert.certified_constant = certified_constant(cert.sigma);

    // Proof-chain identities on a band-limited Gaussian-type probe.
    HermiteExpansion pc;
    pc.dim = g.dim;
    pc.lambda = 1.0;
    pc.cutoff = cutoff;
    const auto indices = enumerate_multi_indices(g.dim, cutoff);
    pc.coeffs.resize(indices.size());
    for (std::size_t q = 0; q < indices.size(); ++q) {
        int deg = indices[q].degree();
        pc.coeffs[q] = std::polar(std::exp(-0.35 * deg), 0.4 * double(q % 7));
    }
    const auto probe = synthesize(pc, g);

    const auto f_alpha = frft_grid(probe, alpha, cutoff);
    const auto& cal = chirp_calibration();
    const double a_coef = M_PI / (cal.scale * cal.scale);
    const double cot_d = std::cos(delta) / std::sin(delta);
    GridFunction phi = f_alpha;
    {
        const std::int64_t total = g.total_cells();
        for (std::int64_t flat = 0; flat < total; ++flat) {
            auto idx = g.unflatten(flat);
            double r2 = 0.0;
            for (int a = 0; a < g.dim; ++a) {
                double x = g.center_coord(idx[std::size_t(a)]);
                r2 += x * x;
            }
            phi[flat] *= std::polar(1.0, a_coef * cot_d * r2);  // chirp sign as in frft_chirp
        }
    }
    cert.norm_identity_rel = std::abs(norm(phi) - norm(f_alpha)) / norm(f_alpha);

    // complement norm of F_beta f two ways: directly, and through the plain
    // Fourier transform of phi on the 1/sin(delta)-stretched set
    const auto f_beta = frft_grid(probe, beta, cutoff);
    cert.chain_direct = masked_norm_sq(f_beta, set_beta, /*complement=*/true);

    const double sd = std::sin(delta);
    double on_set = 0.0;
    {
        // G(eta) = (2 pi)^{-d/2} sum_j phi_j e^{-i u_j . eta} vol, evaluated at
        // eta = x_i / sin(delta) over the cells of the beta set
        const std::int64_t total = g.total_cells();
        const double vol = g.cell_volume();
        const double ftnorm = std::pow(2.0 * M_PI, -0.5 * g.dim);
        std::vector<std::int64_t> cells;
        for (std::int64_t i = 0; i < total; ++i)
            if (set_beta.contains(i)) cells.push_back(i);
        for (std::int64_t i : cells) {
            auto idx = g.unflatten(i);
            std::vector<double> eta(static_cast<std::size_t>(g.dim));
            for (int a = 0; a < g.dim; ++a) eta[std::size_t(a)] = g.center_coord(idx[std::size_t(a)]) / sd;
            cplx acc(0.0);
            std::vector<int> jdx(static_cast<std::size_t>(g.dim), 0);
            for (std::int64_t flat = 0; flat < total; ++flat) {
                double dot = 0.0;
                for (int a = 0; a < g.dim; ++a) dot += g.center_coord(jdx[std::size_t(a)]) * eta[std::size_t(a)];
                acc += phi[flat] * std::polar(1.0, -dot);
                for (int a = g.dim - 1; a >= 0; --a) {
                    if (++jdx[std::size_t(a)] < g.points_per_axis) break;
                    jdx[std::size_t(a)] = 0;
                }
            }
            acc *= ftnorm * vol;
            on_set += std::norm(acc);
        }
        on_set *= vol * std::pow(std::abs(sd), -g.dim);
    }
    cert.chain_rescaled = norm_sq(phi) - on_set;
    cert.chain_rel_diff = std::abs(cert.chain_direct - cert.chain_rescaled) / norm_sq(probe);
    return cert;
}

}  // namespace obsflow
