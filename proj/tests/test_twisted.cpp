#include "doctest.h"

#include "obsflow/twisted.hpp"

#include <fftw3.h>

#include <cmath>
#include <random>

using namespace obsflow;

namespace {

// Gaussian-enveloped random data, localized well inside the window.
GridFunction random_localized(const UniformGrid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto u = [&]() { return double(rng() >> 11) * 0x1.0p-53; };
    const double cx = 2.0 * u() - 1.0, cy = 2.0 * u() - 1.0;
    const double w = 0.6 + 0.4 * u();
    const double bx = u() - 0.5, by = u() - 0.5;
    return sample_on_grid(g, [&](std::span<const double> x) {
        double r2 = (x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy);
        return std::exp(-r2 / (2.0 * w * w)) * std::polar(1.0, bx * x[0] + by * x[1]);
    });
}

// near-coherent probe: minimal breathing under the lambda = 1 flow
GridFunction coherent_probe(const UniformGrid& g, double cx, double cy, double bx, double by) {
    return sample_on_grid(g, [&](std::span<const double> x) {
        double r2 = (x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy);
        return std::exp(-0.25 * r2) * std::polar(1.0, bx * x[0] + by * x[1]);
    });
}

// plain zero-padded convolution through FFT, the lambda = 0 oracle
GridFunction fft_convolve_oracle(const GridFunction& g1, const GridFunction& g2) {
    const auto& g = g1.grid;
    const int n = g.points_per_axis;
    const int nd = 2 * n;
    std::vector<cplx> a(std::size_t(nd) * nd, cplx(0.0)), b(std::size_t(nd) * nd, cplx(0.0));
    for (int j0 = 0; j0 < n; ++j0)
        for (int j1 = 0; j1 < n; ++j1) {
            a[std::size_t(j0) * nd + j1] = g1[std::int64_t(j0) * n + j1];
            b[std::size_t(j0) * nd + j1] = g2[std::int64_t(j0) * n + j1];
        }
    int dims[2] = {nd, nd};
    fftw_plan pa = fftw_plan_dft(2, dims, reinterpret_cast<fftw_complex*>(a.data()),
                                 reinterpret_cast<fftw_complex*>(a.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan pb = fftw_plan_dft(2, dims, reinterpret_cast<fftw_complex*>(b.data()),
                                 reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(pa);
    fftw_execute(pb);
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i] / double(std::size_t(nd) * nd);
    fftw_plan pc = fftw_plan_dft(2, dims, reinterpret_cast<fftw_complex*>(a.data()),
                                 reinterpret_cast<fftw_complex*>(a.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(pc);
    fftw_destroy_plan(pc);
    // (f*g)[i] = sum_j f[i-j+n/2] g[j] vol: circular index i+n/2 of the product
    GridFunction out(g);
    const int q = n / 2;
    for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1) {
            int c0 = (i0 + q) % nd, c1 = (i1 + q) % nd;
            out[std::int64_t(i0) * n + i1] = a[std::size_t(c0) * nd + c1] * g.cell_volume();
        }
    return out;
}

}  // namespace

TEST_CASE("kernel values") {
    SUBCASE("constant modulus everywhere") {
        auto g = make_uniform_grid(2, 8.0, 32);
        PropagatorParams p(1.0, M_PI_2, 1);
        auto k = schrodinger_kernel(p, g);
        const double expect = 1.0 / (4.0 * M_PI);
        for (const auto& v : k.values.values) CHECK(std::abs(v) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(twisted_kernel_modulus(1.0, M_PI_2, 1) == doctest::Approx(expect).epsilon(1e-15));
    }
    SUBCASE("periodic in t with period 2 pi / lambda") {
        auto g = make_uniform_grid(2, 4.0, 16);
        PropagatorParams p1(1.0, 1.3, 1);
        PropagatorParams p2(1.0, 1.3 + 2.0 * M_PI, 1);
        auto k1 = schrodinger_kernel(p1, g);
        auto k2 = schrodinger_kernel(p2, g);
        for (std::int64_t i = 0; i < k1.values.size(); ++i)
            CHECK(std::abs(k1.values[i] - k2.values[i]) < 1e-12);
    }
    SUBCASE("resonant time has no kernel") {
        auto g = make_uniform_grid(2, 4.0, 16);
        CHECK_THROWS(schrodinger_kernel(PropagatorParams(1.0, M_PI, 1), g));
        CHECK_THROWS(schrodinger_kernel(PropagatorParams(0.5, 2.0 * M_PI, 1), g));
    }
}

TEST_CASE("twisted convolution") {
    auto g = make_uniform_grid(2, 8.0, 64);
    auto f = random_localized(g, 31);

    SUBCASE("single-cell spike acts as the unit") {
        // spike at the corner-lattice origin (cell index n/2 per axis)
        GridFunction spike(g);
        const int q = g.points_per_axis / 2;
        spike[std::int64_t(q) * g.points_per_axis + q] = cplx(1.0 / g.cell_volume());
        auto conv = twisted_convolve(f, spike, 0.8);
        // moduli agree exactly; values agree up to the small phase tied to
        // the spike cell's position, which vanishes under refinement
        for (std::int64_t i = 0; i < f.size(); ++i)
            CHECK(std::abs(std::abs(conv[i]) - std::abs(f[i])) < 1e-12);
        CHECK(norm(conv - f) / norm(f) < 0.05);
    }
    SUBCASE("commutation identity is exact") {
        auto h = random_localized(g, 77);
        const double lambda = 1.3;
        auto a = twisted_convolve(f, h, lambda);
        auto b = twisted_convolve(h, f, -lambda);
        CHECK(norm(a - b) / norm(a) < 1e-12);
        double worst = 0.0;
        for (std::int64_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        CHECK(worst < 1e-10);
    }
    SUBCASE("lambda = 0 reduces to the plain convolution") {
        auto h = random_localized(g, 78);
        auto a = twisted_convolve(f, h, 0.0);
        auto b = fft_convolve_oracle(f, h);
        CHECK(norm(a - b) / norm(a) < 1e-8);
    }
    SUBCASE("grid mismatch and support guard") {
        CHECK_THROWS(twisted_convolve(f, GridFunction(make_uniform_grid(2, 8.0, 32)), 1.0));
        auto edge = sample_on_grid(g, [&](std::span<const double> x) {
            double r2 = (x[0] - 7.0) * (x[0] - 7.0) + x[1] * x[1];
            return cplx(std::exp(-r2), 0.0);
        });
        CHECK_THROWS(twisted_convolve(edge, f, 1.0));
    }
}

TEST_CASE("twisted translation") {
    auto g = make_uniform_grid(2, 8.0, 64);
    auto f = random_localized(g, 5);
    const double h = g.spacing();

    SUBCASE("zero translation is the identity") {
        std::vector<double> w = {0.0, 0.0};
        auto t = twisted_translate(f, w, 1.0);
        CHECK(norm(t - f) == 0.0);
    }
    SUBCASE("norm is preserved") {
        std::vector<double> w = {4 * h, -6 * h};
        auto t = twisted_translate(f, w, 0.9);
        CHECK(std::abs(norm(t) - norm(f)) / norm(f) < 1e-14);
    }
    SUBCASE("off-lattice translation is rejected, snapping fixes it") {
        std::vector<double> w = {4.3 * h, 0.0};
        CHECK_THROWS(twisted_translate(f, w, 1.0));
        auto snapped = snap_to_lattice(g, w);
        CHECK(snapped[0] == doctest::Approx(4 * h).epsilon(1e-15));
        CHECK_NOTHROW(twisted_translate(f, snapped, 1.0));
    }
    SUBCASE("intertwining with the convolution") {
        auto k = random_localized(g, 6);
        const double lambda = 1.1;
        std::vector<double> w = {3 * h, 5 * h};
        auto lhs = twisted_convolve(twisted_translate(f, w, lambda), k, lambda);
        auto rhs = twisted_translate(twisted_convolve(f, k, lambda), w, lambda);
        // identical term sets; the two sides only differ in how the phase
        // angles are evaluated
        CHECK(norm(lhs - rhs) / norm(lhs) < 1e-8);
    }
    SUBCASE("support escape is detected") {
        std::vector<double> w = {7.0, 0.0};
        CHECK_THROWS(twisted_translate(f, w, 1.0));
    }
}

TEST_CASE("flow through the streamed kernel") {
    auto g = make_uniform_grid(2, 8.0, 96);
    auto u0 = coherent_probe(g, 0.6, -0.4, 0.4, 0.2);
    const double lambda = 1.0;

    SUBCASE("near unitarity") {
        for (double t : {0.5, 1.0}) {
            auto ut = propagate_special_hermite_signed(u0, lambda, t, 1);
            CHECK(std::abs(norm(ut) / norm(u0) - 1.0) < 1e-3);
        }
    }
    SUBCASE("inverse flow recovers the data") {
        for (double t : {0.5, 1.0}) {
            auto ut = propagate_special_hermite_signed(u0, lambda, t, 1);
            auto back = propagate_special_hermite_signed(ut, lambda, -t, 1);
            CHECK(norm(back - u0) / norm(u0) < 1e-3);
        }
    }
    SUBCASE("equivariance with the twisted translation") {
        // wider window so the strip clipped by the outer translation is
        // negligible against the 1e-6 tolerance
        auto gw = make_uniform_grid(2, 10.0, 120);
        auto v0 = coherent_probe(gw, 0.3, -0.2, 0.3, 0.1);
        const double h = gw.spacing();
        std::vector<double> w = {6 * h, -4 * h};
        auto lhs = propagate_special_hermite_signed(twisted_translate(v0, w, lambda), lambda, 1.0, 1);
        auto rhs = twisted_translate(propagate_special_hermite_signed(v0, lambda, 1.0, 1), w, lambda);
        CHECK(norm(lhs - rhs) / norm(lhs) < 1e-6);
    }
    SUBCASE("time periodicity is exact on the kernel") {
        auto a = propagate_special_hermite_signed(u0, lambda, 0.7, 1);
        auto b = propagate_special_hermite_signed(u0, lambda, 0.7 + 2.0 * M_PI / lambda, 1);
        CHECK(norm(a - b) / norm(a) < 1e-12);
    }
    SUBCASE("resonant times are rejected") {
        CHECK_THROWS(propagate_special_hermite_signed(u0, 1.0, M_PI, 1));
        PropagatorParams p(1.0, 2.0 * M_PI, 1);
        CHECK_THROWS(propagate_special_hermite(u0, p));
    }
    SUBCASE("unitarity defect shrinks under refinement") {
        double errs[2];
        int idx = 0;
        for (int n : {96, 160}) {
            auto gr = make_uniform_grid(2, 8.0, n);
            auto v0 = coherent_probe(gr, 0.6, -0.4, 0.4, 0.2);
            auto vt = propagate_special_hermite_signed(v0, lambda, 1.0, 1);
            errs[idx++] = std::abs(norm(vt) / norm(v0) - 1.0);
        }
        CHECK(errs[1] < errs[0]);
    }
}

TEST_CASE("bilinearity of the twisted convolution") {
    auto g = make_uniform_grid(2, 8.0, 48);
    auto f1 = random_localized(g, 41);
    auto f2 = random_localized(g, 42);
    auto h = random_localized(g, 43);
    const double lambda = 0.7;
    auto lhs = twisted_convolve(f1 + cplx(0.0, 2.0) * f2, h, lambda);
    auto rhs = twisted_convolve(f1, h, lambda) + cplx(0.0, 2.0) * twisted_convolve(f2, h, lambda);
    CHECK(norm(lhs - rhs) / norm(lhs) < 1e-12);
}
