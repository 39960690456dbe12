#include "doctest.h"

#include "obsflow/hermite.hpp"
#include "obsflow/numgrid.hpp"

#include <cmath>
#include <random>

using namespace obsflow;

TEST_CASE("uniform grid arithmetic") {
    auto g = make_uniform_grid(1, 8.0, 16);
    CHECK(g.spacing() == 1.0);
    CHECK(g.total_cells() == 16);
    CHECK(g.spacing() * g.points_per_axis == 2.0 * g.half_extent);  // exact for dyadic sizes

    auto g2 = make_uniform_grid(2, 8.0, 128);
    CHECK(g2.total_cells() == 16384);
    CHECK(g2.cell_volume() == 0.015625);

    CHECK_THROWS(make_uniform_grid(1, 8.0, 3));
    CHECK_THROWS(make_uniform_grid(1, 8.0, 5));
    CHECK_THROWS(make_uniform_grid(0, 8.0, 16));
    CHECK_THROWS(make_uniform_grid(1, -1.0, 16));
}

TEST_CASE("node symmetry about the origin") {
    auto g = make_uniform_grid(1, 8.0, 16);
    for (int j = 0; j < g.points_per_axis; ++j)
        CHECK(g.center_coord(j) == doctest::Approx(-g.center_coord(g.points_per_axis - 1 - j)).epsilon(1e-15));
}

TEST_CASE("gauss hermite rule") {
    SUBCASE("one point") {
        auto r = gauss_hermite_rule(1);
        CHECK(r.nodes[0] == doctest::Approx(0.0));
        CHECK(r.weights[0] == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-15));
    }
    SUBCASE("two points hit the roots of H_2") {
        auto r = gauss_hermite_rule(2);
        CHECK(std::abs(r.nodes[0]) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
        CHECK(std::abs(r.nodes[1]) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
        CHECK(r.weights[0] == doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-14));
        CHECK(r.weights[1] == doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-14));
    }
    SUBCASE("n=40 integrates x^2 exp(-x^2)") {
        auto r = gauss_hermite_rule(40);
        double acc = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * r.nodes[i] * r.nodes[i];
        CHECK(acc == doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-12));
    }
    SUBCASE("exactness on monomials, n=8") {
        // integral of x^{2m} exp(-x^2) = Gamma(m + 1/2); exact through degree 15
        auto r = gauss_hermite_rule(8);
        double expect = std::sqrt(M_PI);  // m = 0
        for (int m = 0; m <= 7; ++m) {
            if (m > 0) expect *= (2.0 * m - 1.0) / 2.0;  // Gamma recursion
            double acc = 0.0;
            for (std::size_t i = 0; i < r.nodes.size(); ++i)
                acc += r.weights[i] * std::pow(r.nodes[i], 2 * m);
            CHECK(acc == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    CHECK_THROWS(gauss_hermite_rule(0));
    CHECK_THROWS(gauss_hermite_rule(201));
}

TEST_CASE("rasterize box measures are exact pixel counts") {
    auto g = make_uniform_grid(1, 8.0, 128);  // h = 0.125
    auto s = rasterize_set(box_shape({-1.0}, {1.0}), g);
    CHECK(s.measure() == 2.0);

    // refinement leaves grid-aligned box measures unchanged exactly
    auto g2 = make_uniform_grid(1, 8.0, 256);
    auto s2 = rasterize_set(box_shape({-1.0}, {1.0}), g2);
    CHECK(s2.measure() == s.measure());
}

TEST_CASE("ball measure converges to pi under refinement") {
    double prev_err = 1e9;
    for (int n : {64, 128, 256}) {
        auto g = make_uniform_grid(2, 2.0, n);
        auto s = rasterize_set(ball_shape({0.0, 0.0}, 1.0), g);
        double err = std::abs(s.measure() - M_PI);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 0.01);
}

TEST_CASE("rasterize errors") {
    auto g = make_uniform_grid(2, 2.0, 64);
    CHECK_THROWS(rasterize_set(box_shape({-3.0, 0.0}, {0.5, 0.5}), g));   // exceeds window
    CHECK_THROWS(rasterize_set(ball_shape({1.8, 0.0}, 0.5), g));          // exceeds window
    // empty rasterization: a ball thinner than any cell, centered between cell centers
    CHECK_THROWS(rasterize_set(ball_shape({0.0, 0.0}, 1e-6), g));
}

TEST_CASE("measure additivity on disjoint masks is exact") {
    auto g = make_uniform_grid(2, 4.0, 64);
    auto a = rasterize_set(box_shape({-2.0, -2.0}, {-1.0, 2.0}), g);
    auto b = rasterize_set(box_shape({1.0, -2.0}, {2.0, 2.0}), g);
    REQUIRE(a.disjoint_from(b));
    CHECK(a.set_union(b).measure() == a.measure() + b.measure());
    // complement measure
    CHECK(a.complement().measure() == doctest::Approx(std::pow(2 * g.half_extent, 2) - a.measure()).epsilon(1e-15));
}

TEST_CASE("inner product axioms") {
    auto g = make_uniform_grid(1, 8.0, 128);
    std::mt19937_64 rng(7);
    auto draw = [&]() {
        GridFunction f(g);
        for (auto& v : f.values)
            v = cplx(double(rng() >> 11) * 0x1.0p-53 - 0.5, double(rng() >> 11) * 0x1.0p-53 - 0.5);
        return f;
    };
    auto f = draw(), h = draw();
    auto ff = inner_product(f, f);
    CHECK(ff.imag() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(ff.real() >= 0.0);
    auto fh = inner_product(f, h);
    auto hf = inner_product(h, f);
    CHECK(fh.real() == doctest::Approx(hf.real()).epsilon(1e-14));
    CHECK(fh.imag() == doctest::Approx(-hf.imag()).epsilon(1e-14));
    CHECK(norm(f) * norm(f) == doctest::Approx(ff.real()).epsilon(1e-13));
    CHECK_THROWS(inner_product(f, GridFunction(make_uniform_grid(1, 8.0, 64))));
}

TEST_CASE("discretized ground state has unit norm") {
    auto g = make_uniform_grid(1, 8.0, 256);
    auto phi0 = sample_on_grid(g, [](std::span<const double> x) {
        return cplx(std::pow(M_PI, -0.25) * std::exp(-0.5 * x[0] * x[0]), 0.0);
    });
    CHECK(inner_product(phi0, phi0).real() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("pairwise sum is deterministic and accurate") {
    std::vector<double> v(100001);
    std::mt19937_64 rng(3);
    for (auto& x : v) x = double(rng() >> 11) * 0x1.0p-53;
    double a = pairwise_sum(std::span<const double>(v));
    double b = pairwise_sum(std::span<const double>(v));
    CHECK(a == b);
    long double ref = 0.0;
    for (double x : v) ref += x;
    CHECK(a == doctest::Approx(double(ref)).epsilon(1e-14));
}
