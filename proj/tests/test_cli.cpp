#include "doctest.h"

#include "obsflow/io.hpp"
#include "obsflow/runner.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace obsflow;
using json = nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::string tmpdir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / "obsflow_tests" / name;
    std::filesystem::create_directories(p);
    return p.string();
}

json observe_config(const std::string& out) {
    return json{{"mode", "observe"},
                {"grid", {{"dim", 2}, {"half_extent", 6.0}, {"points_per_axis", 48}}},
                {"lambda", 1.0},
                {"t", 1.0},
                {"set_e", {{"kind", "box"}, {"lo", {-1.0, -1.0}}, {"hi", {1.0, 1.0}}}},
                {"set_omega", {{"kind", "ball"}, {"center", {0.0, 0.0}}, {"radius", 1.2}}},
                {"samples", {{"count", 5}}},
                {"out_dir", out},
                {"seed", 11}};
}

}  // namespace

TEST_CASE("file round trips") {
    auto dir = tmpdir("io");
    auto g = make_uniform_grid(2, 4.0, 16);
    std::mt19937_64 rng(3);
    GridFunction f(g);
    for (auto& v : f.values)
        v = cplx(double(rng() >> 11) * 0x1.0p-53, double(rng() >> 11) * 0x1.0p-53);
    write_grid_function(dir + "/f.csv", f);
    auto f2 = read_grid_function(dir + "/f.csv");
    CHECK(f2.grid == f.grid);
    CHECK(f2.values == f.values);  // %.17g round-trips doubles exactly

    auto s = rasterize_set(ball_shape({0.0, 0.0}, 1.5), g);
    write_indicator_set(dir + "/s.csv", s);
    auto s2 = read_indicator_set(dir + "/s.csv");
    CHECK(s2.mask == s.mask);

    HermiteExpansion c;
    c.dim = 1;
    c.lambda = 2.0;
    c.cutoff = 6;
    c.coeffs.resize(7);
    for (auto& v : c.coeffs) v = cplx(double(rng() >> 11) * 0x1.0p-53, -0.25);
    write_hermite_expansion(dir + "/c.csv", c);
    auto c2 = read_hermite_expansion(dir + "/c.csv");
    CHECK(c2.lambda == c.lambda);
    CHECK(c2.coeffs == c.coeffs);
}

TEST_CASE("config validation") {
    SUBCASE("unknown mode") {
        CHECK_THROWS(parse_config(json{{"mode", "fly"}}));
    }
    SUBCASE("missing required fields") {
        CHECK_THROWS(parse_config(json{{"mode", "observe"}}));
    }
    SUBCASE("resonant time is rejected at parse time") {
        auto cfg = observe_config(".");
        cfg["t"] = M_PI;  // lambda t on the resonance
        CHECK_THROWS(parse_config(cfg));
        cfg["t"] = 1.0;
        CHECK_NOTHROW(parse_config(cfg));
        // hermite-observe checks the doubled phase
        json hcfg{{"mode", "hermite-observe"},
                  {"grid", {{"dim", 1}, {"half_extent", 12.0}, {"points_per_axis", 384}}},
                  {"lambda", 1.0},
                  {"t", M_PI_2},
                  {"set_a", {{"kind", "box"}, {"lo", {-1.0}}, {"hi", {1.0}}}},
                  {"set_b", {{"kind", "box"}, {"lo", {-1.0}}, {"hi", {1.0}}}}};
        CHECK_THROWS(parse_config(hcfg));
    }
    SUBCASE("shape parsing covers unions and complements") {
        auto g = make_uniform_grid(2, 4.0, 32);
        json shape{{"kind", "union"},
                   {"parts",
                    {json{{"kind", "box"}, {"lo", {-1.0, -1.0}}, {"hi", {0.0, 0.0}}},
                     json{{"kind", "complement"},
                          {"of", json{{"kind", "ball"}, {"center", {0.0, 0.0}}, {"radius", 3.0}}}}}}};
        auto s = rasterize_set(shape_from_json(shape), g);
        CHECK(s.count() > 0);
    }
}

TEST_CASE("observe experiment is deterministic byte for byte") {
    auto dir1 = tmpdir("det1");
    auto dir2 = tmpdir("det2");
    auto r1 = run_experiment(parse_config(observe_config(dir1)));
    auto r2 = run_experiment(parse_config(observe_config(dir2)));
    CHECK(r1 == r2);
    CHECK(slurp(dir1 + "/report.json") == slurp(dir2 + "/report.json"));
    CHECK(slurp(dir1 + "/ratios.csv") == slurp(dir2 + "/ratios.csv"));
    CHECK(!slurp(dir1 + "/ratios.csv").empty());

    SUBCASE("a different seed changes the ratios") {
        auto dir3 = tmpdir("det3");
        auto cfg = observe_config(dir3);
        cfg["seed"] = 12;
        run_experiment(parse_config(cfg));
        CHECK(slurp(dir3 + "/ratios.csv") != slurp(dir1 + "/ratios.csv"));
    }
}

TEST_CASE("flow file transforms") {
    auto dir = tmpdir("flow");
    auto g = make_uniform_grid(1, 12.0, 384);
    auto f = sample_on_grid(g, [](std::span<const double> x) {
        return cplx(std::exp(-0.5 * x[0] * x[0]), 0.0);
    });
    write_grid_function(dir + "/in.csv", f);

    json cfg{{"mode", "hermite-flow"}, {"lambda", 1.0}, {"t", 0.7},
             {"in", dir + "/in.csv"}, {"out", dir + "/out.csv"},
             {"route", "spectral"}, {"cutoff", 30}, {"out_dir", dir}};
    auto rep = run_experiment(parse_config(cfg));
    CHECK(rep["out_norm"].get<double>() == doctest::Approx(rep["in_norm"].get<double>()).epsilon(1e-9));

    auto back = read_grid_function(dir + "/out.csv");
    CHECK(back.grid == g);

    json fcfg{{"mode", "frft"}, {"alpha", 2.0 * M_PI}, {"in", dir + "/in.csv"},
              {"out", dir + "/id.csv"}, {"cutoff", 30}, {"out_dir", dir}};
    run_experiment(parse_config(fcfg));
    auto ident = read_grid_function(dir + "/id.csv");
    CHECK(norm(ident - f) < 1e-12);
}

TEST_CASE("calibrate mode emits both calibrations") {
    auto dir = tmpdir("cal");
    json cfg{{"mode", "calibrate"}, {"out_dir", dir}};
    auto rep = run_experiment(parse_config(cfg));
    CHECK(rep["frft"]["scale"].get<double>() == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-10));
    CHECK(rep["frft"]["max_residual"].get<double>() < 1e-6);
    CHECK(rep["kernel_normalization"]["abs_error"].get<double>() < 1e-3);
    CHECK(rep["kernel_normalization"]["expected"].get<double>() ==
          doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-15));
}

TEST_CASE("sweep aggregation") {
    auto dir = tmpdir("sweep");
    json base = observe_config(dir);
    base.erase("out_dir");
    json cfg{{"mode", "sweep"},
             {"experiment", base},
             {"sweep", {{"parameter", "t"}, {"values", {0.8, 1.0, M_PI, 1.2}}}},
             {"out_dir", dir},
             {"seed", 11}};
    auto rep = run_experiment(parse_config(cfg));
    REQUIRE(rep["rows"].size() == 4);
    // the resonant point carries an error marker, the others complete
    CHECK(rep["rows"][2].contains("error"));
    CHECK(!rep["rows"][0].contains("error"));
    CHECK(!rep["rows"][3].contains("error"));
    auto csv = slurp(dir + "/sweep.csv");
    CHECK(csv.find("sigma_max") != std::string::npos);
    CHECK(csv.find("resonant") != std::string::npos);

    SUBCASE("empty parameter set yields the bare header") {
        auto dir2 = tmpdir("sweep_empty");
        json cfg2 = cfg;
        cfg2["out_dir"] = dir2;
        cfg2["sweep"]["values"] = json::array();
        auto rep2 = run_experiment(parse_config(cfg2));
        CHECK(rep2["rows"].empty());
        auto csv2 = slurp(dir2 + "/sweep.csv");
        CHECK(csv2 == "index,t,sigma_max,certified_constant,hs_norm,error\n");
    }
    SUBCASE("threaded sweep produces identical bytes") {
        auto dir3 = tmpdir("sweep_mt");
        json cfg3 = cfg;
        cfg3["out_dir"] = dir3;
        cfg3["threads"] = 4;
        run_experiment(parse_config(cfg3));
        auto a = slurp(dir + "/sweep.csv");
        auto b = slurp(dir3 + "/sweep.csv");
        CHECK(a == b);
    }
}
