#include "doctest.h"

#include "obsflow/frft.hpp"
#include "obsflow/observability.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <random>

using namespace obsflow;

namespace {

GridFunction sample_phi(const UniformGrid& g, int k) {
    return sample_on_grid(g, [&](std::span<const double> x) {
        return cplx(hermite_eval(MultiIndex{{k}}, 1.0, x), 0.0);
    });
}

HermiteExpansion random_expansion(int dim, int cutoff, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    HermiteExpansion c;
    c.dim = dim;
    c.lambda = 1.0;
    c.cutoff = cutoff;
    c.coeffs.resize(static_cast<std::size_t>(multi_index_count(dim, cutoff)));
    for (auto& v : c.coeffs)
        v = cplx(double(rng() >> 11) * 0x1.0p-53 - 0.5, double(rng() >> 11) * 0x1.0p-53 - 0.5);
    return c;
}

}  // namespace

TEST_CASE("order classification and chirp factor invariants") {
    CHECK(classify_order(0.7).classification == OrderClass::Generic);
    CHECK(classify_order(0.0).classification == OrderClass::EvenPiMultiple);
    CHECK(classify_order(2.0 * M_PI).classification == OrderClass::EvenPiMultiple);
    CHECK(classify_order(M_PI).classification == OrderClass::OddPiMultiple);
    CHECK(classify_order(-3.0 * M_PI).classification == OrderClass::OddPiMultiple);
    CHECK(classify_order(M_PI + 1e-12).classification == OrderClass::OddPiMultiple);
    CHECK(classify_order(M_PI + 1e-7).classification == OrderClass::Generic);

    for (double alpha : {0.3, 1.0, M_PI_2, 2.8, -1.3, 4.0}) {
        auto cf = chirp_factors(alpha);
        CHECK(std::abs(std::norm(cf.c_alpha) * std::abs(cf.sin_alpha) - 1.0) < 1e-14);
    }
    CHECK_THROWS(chirp_factors(M_PI));
}

TEST_CASE("spectral transform on coefficients") {
    auto c = random_expansion(1, 24, 5);
    SUBCASE("alpha = 0 is the identity") {
        auto c2 = frft_spectral(c, 0.0);
        for (std::size_t q = 0; q < c.coeffs.size(); ++q) CHECK(c2.coeffs[q] == c.coeffs[q]);
    }
    SUBCASE("alpha = pi is the parity operator on coefficients") {
        auto c2 = frft_spectral(c, M_PI);
        for (std::size_t q = 0; q < c.coeffs.size(); ++q) {
            double sign = (q % 2 == 0) ? 1.0 : -1.0;  // dim 1: index q has degree q
            CHECK(std::abs(c2.coeffs[q] - sign * c.coeffs[q]) < 1e-12);
        }
    }
    SUBCASE("the ground-state coefficient never moves") {
        for (double alpha : {0.1, 1.2, 3.9, -0.7}) {
            auto c2 = frft_spectral(c, alpha);
            CHECK(c2.coeffs[0] == c.coeffs[0]);
        }
    }
    SUBCASE("unitary on coefficients, group law to 1e-12") {
        auto c1 = frft_spectral(c, 0.83);
        CHECK(c1.l2_norm() == doctest::Approx(c.l2_norm()).epsilon(1e-14));
        auto c2 = frft_spectral(c1, 1.41);
        auto c12 = frft_spectral(c, 0.83 + 1.41);
        double worst = 0.0;
        for (std::size_t q = 0; q < c.coeffs.size(); ++q)
            worst = std::max(worst, std::abs(c2.coeffs[q] - c12.coeffs[q]));
        CHECK(worst < 1e-12);
    }
    SUBCASE("requires the unit-scale basis") {
        auto bad = c;
        bad.lambda = 2.0;
        CHECK_THROWS(frft_spectral(bad, 0.5));
    }
}

TEST_CASE("grid transform special cases are exact") {
    auto g = make_uniform_grid(1, 12.0, 384);
    auto f = synthesize(random_expansion(1, 20, 9), g);
    SUBCASE("full rotation returns the function") {
        auto f2 = frft_grid(f, 2.0 * M_PI, 24);
        CHECK(norm(f2 - f) < 1e-10);
    }
    SUBCASE("pi gives the exact pointwise parity") {
        auto f2 = frft_grid(f, M_PI, 24);
        const int n = g.points_per_axis;
        for (int j = 0; j < n; ++j) CHECK(std::abs(f2[j] - f[n - 1 - j]) == 0.0);
    }
    SUBCASE("group law on the grid") {
        auto a = frft_grid(frft_grid(f, 0.9, 24), 0.7, 24);
        auto b = frft_grid(f, 1.6, 24);
        CHECK(norm(a - b) / norm(f) < 1e-8);
    }
    SUBCASE("inverse composition") {
        auto a = frft_grid(frft_grid(f, 1.1, 24), -1.1, 24);
        CHECK(norm(a - f) / norm(f) < 1e-8);
    }
}

TEST_CASE("calibration pins the dilation and branch phases") {
    auto cal = calibrate_conventions();
    CHECK(cal.scale == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-12));
    CHECK(cal.max_residual < 1e-6);
    // sin > 0 branch needs no phase, sin < 0 branch carries -i per axis
    CHECK(std::abs(cal.phase_pos - cplx(1.0, 0.0)) < 1e-9);
    CHECK(std::abs(cal.phase_neg - cplx(0.0, -1.0)) < 1e-9);
    SUBCASE("running calibration twice is bit-identical") {
        auto cal2 = calibrate_conventions();
        CHECK(cal2.scale == cal.scale);
        CHECK(cal2.phase_pos == cal.phase_pos);
        CHECK(cal2.phase_neg == cal.phase_neg);
        CHECK(cal2.probe_residuals == cal.probe_residuals);
    }
    SUBCASE("probe phase recovery: Phi_1 at pi/3 gains e^{-i alpha}") {
        auto g = make_uniform_grid(1, 8.0, 512);
        auto phi1 = sample_phi(g, 1);
        auto got = frft_chirp(phi1, M_PI / 3.0, cal);
        cplx ip = inner_product(got, phi1);
        CHECK(std::abs(ip / std::abs(ip) - std::polar(1.0, -M_PI / 3.0)) < 1e-6);
        CHECK(norm(got - std::polar(1.0, -M_PI / 3.0) * phi1) < 1e-6);
    }
}

TEST_CASE("chirp route against the spectral oracle") {
    auto g = make_uniform_grid(1, 8.0, 512);
    SUBCASE("unitarity on a Gaussian") {
        auto f = sample_on_grid(g, [](std::span<const double> x) {
            return cplx(std::exp(-0.5 * (x[0] - 0.4) * (x[0] - 0.4)), 0.0);
        });
        for (double alpha : {0.4, 1.1, -0.9, 2.6}) {
            auto out = frft_chirp(f, alpha);
            CHECK(std::abs(norm(out) - norm(f)) / norm(f) < 1e-6);
        }
    }
    SUBCASE("ground state is a fixed point at pi/2") {
        auto phi0 = sample_phi(g, 0);
        auto out = frft_chirp(phi0, M_PI_2);
        CHECK(norm(out - phi0) < 1e-6);
    }
    SUBCASE("band-limited agreement with the spectral route") {
        auto f = synthesize(random_expansion(1, 7, 21), g);
        for (double alpha : {0.5, 1.0, 2.0, -0.5, -2.6, 4.0, 7.0}) {
            auto a = frft_chirp(f, alpha);
            auto b = frft_grid(f, alpha, 7);
            CHECK(norm(a - b) / norm(f) < 1e-6);
        }
    }
    SUBCASE("resonant order is rejected") {
        auto phi0 = sample_phi(g, 0);
        CHECK_THROWS(frft_chirp(phi0, M_PI));
        CHECK_THROWS(frft_chirp(phi0, 0.0));
    }
    SUBCASE("aliasing guard fires on a coarse grid with small sin") {
        auto gc = make_uniform_grid(1, 8.0, 64);
        auto f = sample_on_grid(gc, [](std::span<const double> x) {
            return cplx(std::exp(-0.5 * x[0] * x[0]), 0.0);
        });
        CHECK_THROWS(frft_chirp(f, 0.05));
    }
}

TEST_CASE("pair restriction certificate") {
    auto g = make_uniform_grid(1, 8.0, 64);
    auto set_a = rasterize_set(box_shape({-1.0}, {1.0}), g);
    auto set_b = rasterize_set(box_shape({-1.0}, {1.0}), g);
    const int cutoff = 7;

    auto cert = frft_nazarov_certificate(set_a, set_b, 0.0, M_PI_2, cutoff);
    CHECK(cert.sigma < 1.0);
    CHECK(cert.certified_constant > 0.0);
    CHECK(std::isfinite(cert.certified_constant));
    CHECK(cert.norm_identity_rel < 1e-12);

    SUBCASE("dense SVD oracle agrees with the power iteration") {
        // materialize the masked operator column by column over the A cells
        std::vector<std::int64_t> cols, rows;
        for (std::int64_t i = 0; i < g.total_cells(); ++i) {
            if (set_a.contains(i)) cols.push_back(i);
            if (set_b.contains(i)) rows.push_back(i);
        }
        Eigen::MatrixXcd m(rows.size(), cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) {
            GridFunction e(g);
            e[cols[c]] = cplx(1.0);
            auto col = masked(frft_grid(e, M_PI_2, cutoff), set_b);
            for (std::size_t r = 0; r < rows.size(); ++r) m(long(r), long(c)) = col[rows[r]];
        }
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
        CHECK(std::abs(cert.sigma - svd.singularValues()(0)) < 1e-8);
    }

    SUBCASE("restriction monotonicity: shrinking A never raises sigma") {
        auto half = rasterize_set(box_shape({-0.5}, {0.5}), g);
        auto cert2 = frft_nazarov_certificate(half, set_b, 0.0, M_PI_2, cutoff);
        CHECK(cert2.sigma <= cert.sigma + 1e-12);
    }

    SUBCASE("resonant separation is rejected") {
        CHECK_THROWS(frft_nazarov_certificate(set_a, set_b, 0.3, 0.3 + M_PI, cutoff));
    }
}

TEST_CASE("proof chain: complement norms agree along the rescaled Fourier route") {
    auto g = make_uniform_grid(1, 12.0, 384);
    auto set_a = rasterize_set(box_shape({-1.0}, {1.0}), g);
    auto set_b = rasterize_set(box_shape({-1.5}, {0.5}), g);
    auto cert = frft_nazarov_certificate(set_a, set_b, 0.0, M_PI_2, 24);
    CHECK(cert.chain_rel_diff < 1e-6);
    CHECK(cert.norm_identity_rel < 1e-10);

    // a second, asymmetric order pair
    auto cert2 = frft_nazarov_certificate(set_a, set_b, 0.4, 1.4, 24);
    CHECK(cert2.chain_rel_diff < 1e-6);
}
