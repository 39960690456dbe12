#include "obsflow/runner.hpp"

#include "obsflow/frft.hpp"
#include "obsflow/hermite_flow.hpp"
#include "obsflow/io.hpp"
#include "obsflow/observability.hpp"
#include "obsflow/setgeom.hpp"
#include "obsflow/twisted.hpp"

#include <filesystem>
#include <fstream>
#include <future>

namespace obsflow {

using json = nlohmann::ordered_json;

ShapeSpec shape_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "box")
        return box_shape(j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>());
    if (kind == "ball")
        return ball_shape(j.at("center").get<std::vector<double>>(), j.at("radius").get<double>());
    if (kind == "union") {
        std::vector<ShapeSpec> parts;
        for (const auto& p : j.at("parts")) parts.push_back(shape_from_json(p));
        return union_shape(std::move(parts));
    }
    if (kind == "complement") return complement_shape(shape_from_json(j.at("of")));
    throw std::invalid_argument("config: unknown shape kind '" + kind + "'");
}

UniformGrid grid_from_json(const json& j) {
    return make_uniform_grid(j.at("dim").get<int>(), j.at("half_extent").get<double>(),
                             j.at("points_per_axis").get<int>());
}

namespace {

const std::vector<std::string> kModes = {"frft",    "hermite-flow", "hermite-observe",
                                         "special-flow", "observe",  "set-translate",
                                         "calibrate",    "sweep"};

void require_fields(const json& p, std::initializer_list<const char*> fields,
                    const std::string& mode) {
    for (const char* f : fields)
        if (!p.contains(f))
            throw std::invalid_argument("config: mode '" + mode + "' requires field '" + f + "'");
}

SampleSpec samples_from_json(const json& j, std::uint64_t seed) {
    SampleSpec spec;
    spec.seed = seed;
    if (j.contains("count")) spec.count = j.at("count").get<int>();
    if (j.contains("mixture_terms")) spec.mixture_terms = j.at("mixture_terms").get<int>();
    if (j.contains("center_range")) spec.center_range = j.at("center_range").get<double>();
    if (j.contains("width_min")) spec.width_min = j.at("width_min").get<double>();
    if (j.contains("width_max")) spec.width_max = j.at("width_max").get<double>();
    if (j.contains("freq_range")) spec.freq_range = j.at("freq_range").get<double>();
    return spec;
}

json sample_spec_json(const SampleSpec& s) {
    json j;
    j["count"] = s.count;
    j["seed"] = s.seed;
    j["mixture_terms"] = s.mixture_terms;
    j["center_range"] = s.center_range;
    j["width_min"] = s.width_min;
    j["width_max"] = s.width_max;
    j["freq_range"] = s.freq_range;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << text;
}

void write_ratios_csv(const std::string& path, const std::vector<SampleRatio>& ratios) {
    std::string csv = "sample,ratio,outside_source_set\n";
    for (std::size_t i = 0; i < ratios.size(); ++i)
        csv += std::to_string(i) + "," + format_double(ratios[i].ratio) + "," +
               (ratios[i].outside_source_set ? "1" : "0") + "\n";
    write_text(path, csv);
}

json report_json(const ObservabilityReport& r) {
    json j;
    j["sigma_max"] = r.sigma_max;
    j["hs_norm"] = r.hs_norm;
    if (std::isnan(r.hs_closed_form))
        j["hs_closed_form"] = nullptr;
    else
        j["hs_closed_form"] = r.hs_closed_form;
    j["c0"] = r.c0;
    j["supported_case_constant"] = r.supported_case_constant;
    j["certified_constant"] = r.certified_constant;
    j["lambda"] = r.lambda;
    j["t"] = r.t;
    j["d"] = r.d;
    j["measure_e"] = r.measure_e;
    j["measure_omega"] = r.measure_omega;
    j["dense_route"] = r.dense_route;
    j["samples"] = r.ratios.size();
    j["max_ratio"] = r.max_ratio;
    j["caveat"] = r.caveat;
    return j;
}

PropagatorParams params_from_json(const json& p) {
    return PropagatorParams(p.at("lambda").get<double>(), p.at("t").get<double>(),
                            p.contains("d") ? p.at("d").get<int>() : 1);
}

json run_frft(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    GridFunction f = read_grid_function(p.at("in").get<std::string>());
    const double alpha = p.at("alpha").get<double>();
    const std::string method = p.contains("method") ? p.at("method").get<std::string>() : "spectral";
    GridFunction out;
    if (method == "spectral") {
        const int cutoff = p.contains("cutoff") ? p.at("cutoff").get<int>() : 64;
        out = frft_grid(f, alpha, cutoff);
    } else if (method == "chirp") {
        out = frft_chirp(f, alpha);
    } else {
        throw std::invalid_argument("config: frft method must be 'spectral' or 'chirp'");
    }
    write_grid_function(p.at("out").get<std::string>(), out);
    json rep;
    rep["mode"] = "frft";
    rep["alpha"] = alpha;
    rep["method"] = method;
    rep["in_norm"] = norm(f);
    rep["out_norm"] = norm(out);
    return rep;
}

json run_hermite_flow(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    GridFunction f = read_grid_function(p.at("in").get<std::string>());
    const auto params = params_from_json(p);
    const int cutoff = p.contains("cutoff") ? p.at("cutoff").get<int>() : 64;
    const std::string route = p.contains("route") ? p.at("route").get<std::string>() : "spectral";
    GridFunction out;
    if (route == "spectral")
        out = propagate_hermite_spectral_grid(f, params, cutoff);
    else if (route == "frft")
        out = propagate_hermite_frft(f, params, cutoff);
    else
        throw std::invalid_argument("config: hermite-flow route must be 'spectral' or 'frft'");
    write_grid_function(p.at("out").get<std::string>(), out);
    json rep;
    rep["mode"] = "hermite-flow";
    rep["lambda"] = params.lambda;
    rep["t"] = params.t;
    rep["route"] = route;
    rep["in_norm"] = norm(f);
    rep["out_norm"] = norm(out);
    return rep;
}

json run_special_flow(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    GridFunction f = read_grid_function(p.at("in").get<std::string>());
    if (f.grid.dim % 2 != 0)
        throw std::invalid_argument("special-flow: grid dimension must be even (C^d)");
    PropagatorParams params(p.at("lambda").get<double>(), p.at("t").get<double>(), f.grid.dim / 2);
    GridFunction out = propagate_special_hermite(f, params);
    write_grid_function(p.at("out").get<std::string>(), out);
    json rep;
    rep["mode"] = "special-flow";
    rep["lambda"] = params.lambda;
    rep["t"] = params.t;
    rep["in_norm"] = norm(f);
    rep["out_norm"] = norm(out);
    return rep;
}

json run_observe(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    const UniformGrid grid = grid_from_json(p.at("grid"));
    PropagatorParams params(p.at("lambda").get<double>(), p.at("t").get<double>(),
                            grid.dim / 2);
    const auto set_e = rasterize_set(shape_from_json(p.at("set_e")), grid);
    const auto set_omega = rasterize_set(shape_from_json(p.at("set_omega")), grid);
    const auto spec = samples_from_json(p.contains("samples") ? p.at("samples") : json::object(),
                                        cfg.seed);
    const auto samples = gaussian_mixture_samples(grid, spec);
    const auto rep = special_observability_experiment(samples, params, set_e, set_omega);

    json j = report_json(rep);
    j["mode"] = "observe";
    j["sample_spec"] = sample_spec_json(spec);
    write_ratios_csv(cfg.out_dir + "/ratios.csv", rep.ratios);
    return j;
}

json run_hermite_observe(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    const UniformGrid grid = grid_from_json(p.at("grid"));
    PropagatorParams params(p.at("lambda").get<double>(), p.at("t").get<double>(), grid.dim);
    const int cutoff = p.contains("cutoff") ? p.at("cutoff").get<int>() : 64;
    const auto set_a = rasterize_set(shape_from_json(p.at("set_a")), grid);
    const auto set_b = rasterize_set(shape_from_json(p.at("set_b")), grid);
    const auto spec = samples_from_json(p.contains("samples") ? p.at("samples") : json::object(),
                                        cfg.seed);
    const auto samples = gaussian_mixture_samples(grid, spec);
    const auto rep = hermite_observability_experiment(samples, params, set_a, set_b, cutoff);

    json j = report_json(rep.base);
    j["mode"] = "hermite-observe";
    j["scaled_measure_a"] = rep.scaled_measure_a;
    j["scaled_measure_b"] = rep.scaled_measure_b;
    j["frft_order"] = rep.frft_order;
    j["cutoff"] = cutoff;
    j["sample_spec"] = sample_spec_json(spec);
    write_ratios_csv(cfg.out_dir + "/ratios.csv", rep.base.ratios);
    return j;
}

json run_set_translate(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    const UniformGrid grid = grid_from_json(p.at("grid"));
    const auto a = rasterize_set(shape_from_json(p.at("set_a")), grid);
    const auto a0 = rasterize_set(shape_from_json(p.at("set_a0")), grid);
    const auto b = rasterize_set(shape_from_json(p.at("set_b")), grid);
    const auto b0 = rasterize_set(shape_from_json(p.at("set_b0")), grid);
    const double eps = p.at("epsilon").get<double>();

    json j;
    j["mode"] = "set-translate";
    j["epsilon"] = eps;
    auto res = find_translation(a, a0, b, b0, eps);
    if (!res) {
        j["feasible"] = false;
        return j;
    }
    j["feasible"] = true;
    j["w_cells"] = res->w_cells;
    j["w"] = res->w;
    j["branch"] = res->branch == GrowthBranch::ABranch
                      ? "A"
                      : (res->branch == GrowthBranch::BBranch ? "B" : "both");
    j["measure_a_before"] = res->measure_a_before;
    j["measure_a_after"] = res->measure_a_after;
    j["measure_b_before"] = res->measure_b_before;
    j["measure_b_after"] = res->measure_b_after;
    j["found_by_level_shell"] = res->found_by_level_shell;

    if (p.contains("construction")) {
        const auto& c = p.at("construction");
        const int n_budget = c.at("budget_exponent").get<int>();
        const int steps = c.at("steps").get<int>();
        auto trace = iterate_construction(a0, b0, n_budget, steps);
        json tr;
        tr["budget_exponent"] = n_budget;
        tr["requested_steps"] = steps;
        tr["completed_steps"] = trace.steps.size();
        tr["truncated"] = trace.truncated;
        json steps_json = json::array();
        for (const auto& s : trace.steps) {
            json sj;
            sj["w_cells"] = s.w_cells;
            sj["epsilon"] = s.epsilon;
            sj["branch"] = s.branch == GrowthBranch::ABranch
                               ? "A"
                               : (s.branch == GrowthBranch::BBranch ? "B" : "both");
            sj["measure_e"] = s.measure_e;
            sj["measure_omega"] = s.measure_omega;
            steps_json.push_back(sj);
        }
        tr["steps"] = steps_json;
        j["construction"] = tr;
    }
    return j;
}

json run_calibrate(const ExperimentConfig&) {
    json j;
    j["mode"] = "calibrate";
    const auto cal = calibrate_conventions();
    json fr;
    fr["scale"] = cal.scale;
    fr["phase_pos"] = {cal.phase_pos.real(), cal.phase_pos.imag()};
    fr["phase_neg"] = {cal.phase_neg.real(), cal.phase_neg.imag()};
    fr["max_residual"] = cal.max_residual;
    fr["probe_residuals"] = cal.probe_residuals;
    j["frft"] = fr;

    // kernel normalization calibration: the positive scalar making the flow
    // unitary under refinement, reported next to (4 pi)^{-d}
    json kc;
    const double lambda = 1.0, t = 1.0;
    json seq = json::array();
    double last = 0.0;
    for (int n : {96, 128, 160}) {
        const auto grid = make_uniform_grid(2, 8.0, n);
        GridFunction u0 = sample_on_grid(grid, [](std::span<const double> x) {
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            return cplx(std::exp(-r2), 0.0);
        });
        // the flow normalization scales norms linearly, so the constant that
        // makes the flow exactly unitary at this resolution is the decided
        // one divided by the measured norm ratio
        GridFunction ut = propagate_special_hermite_signed(u0, lambda, t, 1);
        const double ratio = norm(ut) / norm(u0);
        last = std::pow(4.0 * M_PI, -1.0) / ratio;
        json row;
        row["points_per_axis"] = n;
        row["calibrated_normalization"] = last;
        seq.push_back(row);
    }
    kc["refinement"] = seq;
    kc["calibrated"] = last;
    kc["expected"] = std::pow(4.0 * M_PI, -1.0);
    kc["abs_error"] = std::abs(last - std::pow(4.0 * M_PI, -1.0));
    j["kernel_normalization"] = kc;
    return j;
}

json run_one(const ExperimentConfig& cfg) {
    if (cfg.mode == "frft") return run_frft(cfg);
    if (cfg.mode == "hermite-flow") return run_hermite_flow(cfg);
    if (cfg.mode == "special-flow") return run_special_flow(cfg);
    if (cfg.mode == "observe") return run_observe(cfg);
    if (cfg.mode == "hermite-observe") return run_hermite_observe(cfg);
    if (cfg.mode == "set-translate") return run_set_translate(cfg);
    if (cfg.mode == "calibrate") return run_calibrate(cfg);
    throw std::invalid_argument("config: unknown mode '" + cfg.mode + "'");
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    cfg.mode = j.at("mode").get<std::string>();
    if (std::find(kModes.begin(), kModes.end(), cfg.mode) == kModes.end())
        throw std::invalid_argument("config: unknown mode '" + cfg.mode + "'");
    cfg.params = j;
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();

    // mode-specific validation, including resonance hypotheses, at parse time
    if (cfg.mode == "observe") {
        require_fields(j, {"grid", "lambda", "t", "set_e", "set_omega"}, cfg.mode);
        const UniformGrid g = grid_from_json(j.at("grid"));
        if (g.dim % 2 != 0) throw std::invalid_argument("config: observe grid dimension must be even");
        PropagatorParams p(j.at("lambda").get<double>(), j.at("t").get<double>(), g.dim / 2);
        if (!p.special_valid())
            throw std::invalid_argument("config: lambda*t lies in pi Z (resonant, kernel singular)");
    } else if (cfg.mode == "hermite-observe") {
        require_fields(j, {"grid", "lambda", "t", "set_a", "set_b"}, cfg.mode);
        const UniformGrid g = grid_from_json(j.at("grid"));
        PropagatorParams p(j.at("lambda").get<double>(), j.at("t").get<double>(), g.dim);
        if (!p.hermite_valid())
            throw std::invalid_argument("config: 2*lambda*t lies in pi Z (resonant)");
    } else if (cfg.mode == "frft") {
        require_fields(j, {"alpha", "in", "out"}, cfg.mode);
    } else if (cfg.mode == "hermite-flow") {
        require_fields(j, {"lambda", "t", "in", "out"}, cfg.mode);
    } else if (cfg.mode == "special-flow") {
        require_fields(j, {"lambda", "t", "in", "out"}, cfg.mode);
    } else if (cfg.mode == "set-translate") {
        require_fields(j, {"grid", "set_a", "set_a0", "set_b", "set_b0", "epsilon"}, cfg.mode);
    } else if (cfg.mode == "sweep") {
        require_fields(j, {"experiment", "sweep"}, cfg.mode);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    json j = json::parse(is);
    return parse_config(j);
}

nlohmann::ordered_json run_experiment(const ExperimentConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    if (config.mode == "sweep") return run_sweep(config);
    json rep = run_one(config);
    rep["seed"] = config.seed;
    write_text(config.out_dir + "/report.json", rep.dump(2) + "\n");
    return rep;
}

nlohmann::ordered_json run_sweep(const ExperimentConfig& config) {
    const auto& p = config.params;
    const auto& sw = p.at("sweep");
    const std::string param = sw.at("parameter").get<std::string>();
    const auto values = sw.at("values");

    // each point is an independent experiment; run them concurrently but
    // aggregate strictly in declared order
    std::vector<std::future<json>> futures;
    std::vector<ExperimentConfig> points;
    for (const auto& v : values) {
        json pt = p.at("experiment");
        pt[param] = v;
        pt["out_dir"] = config.out_dir + "/point_" + std::to_string(points.size());
        ExperimentConfig sub;
        sub.mode = pt.at("mode").get<std::string>();
        sub.params = pt;
        sub.out_dir = pt["out_dir"].get<std::string>();
        sub.seed = config.seed;
        points.push_back(std::move(sub));
    }
    const std::size_t workers = std::max(1, config.threads);
    for (auto& pt : points) {
        if (workers > 1) {
            futures.push_back(std::async(std::launch::async, [&pt]() {
                std::filesystem::create_directories(pt.out_dir);
                ExperimentConfig validated = parse_config(pt.params);
                validated.out_dir = pt.out_dir;
                validated.seed = pt.seed;
                return run_one(validated);
            }));
        }
    }

    json rows = json::array();
    std::string csv = "index," + param + ",sigma_max,certified_constant,hs_norm,error\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        json row;
        row["index"] = i;
        row[param] = values[i];
        std::string err;
        json rep;
        try {
            if (workers > 1) {
                rep = futures[i].get();
            } else {
                std::filesystem::create_directories(points[i].out_dir);
                ExperimentConfig validated = parse_config(points[i].params);
                validated.out_dir = points[i].out_dir;
                validated.seed = points[i].seed;
                rep = run_one(validated);
            }
        } catch (const std::exception& e) {
            err = e.what();
        }
        if (err.empty()) {
            row["sigma_max"] = rep.value("sigma_max", 0.0);
            row["certified_constant"] = rep.value("certified_constant", 0.0);
            row["hs_norm"] = rep.value("hs_norm", 0.0);
            csv += std::to_string(i) + "," + values[i].dump() + "," +
                   format_double(rep.value("sigma_max", 0.0)) + "," +
                   format_double(rep.value("certified_constant", 0.0)) + "," +
                   format_double(rep.value("hs_norm", 0.0)) + ",\n";
        } else {
            row["error"] = err;
            csv += std::to_string(i) + "," + values[i].dump() + ",,,," + "\"" + err + "\"\n";
        }
        rows.push_back(row);
    }
    json out;
    out["mode"] = "sweep";
    out["parameter"] = param;
    out["rows"] = rows;
    out["seed"] = config.seed;
    write_text(config.out_dir + "/sweep.csv", csv);
    write_text(config.out_dir + "/report.json", out.dump(2) + "\n");
    return out;
}

}  // namespace obsflow
