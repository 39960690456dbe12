// Command-line front end: experiment runner and file transforms for the
// Hermite / twisted Schrödinger flow library.

#include "obsflow/runner.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <iostream>

using json = nlohmann::ordered_json;

namespace {

int run_config_mode(const std::string& config_path, const std::string& out_dir,
                    std::uint64_t seed, bool seed_set, int threads) {
    try {
        obsflow::ExperimentConfig cfg = obsflow::load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed_set) cfg.seed = seed;
        if (threads > 0) cfg.threads = threads;
        json rep = obsflow::run_experiment(cfg);
        std::cout << rep.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        json err;
        err["error"]["type"] = "domain_error";
        err["error"]["message"] = e.what();
        std::cerr << err.dump(2) << "\n";
        return 1;
    }
}

int run_inline_mode(json params, const std::string& out_dir, std::uint64_t seed, bool seed_set,
                    int threads) {
    try {
        if (!out_dir.empty()) params["out_dir"] = out_dir;
        obsflow::ExperimentConfig cfg = obsflow::parse_config(params);
        if (seed_set) cfg.seed = seed;
        if (threads > 0) cfg.threads = threads;
        json rep = obsflow::run_experiment(cfg);
        std::cout << rep.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        json err;
        err["error"]["type"] = "domain_error";
        err["error"]["message"] = e.what();
        std::cerr << err.dump(2) << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"obsflow: fractional Fourier, Hermite and twisted Schrödinger flows with "
                 "certified observability constants"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_path, out_path;
    std::uint64_t seed = 1;
    bool seed_set = false;
    int threads = 0;
    double alpha = 0.0, lambda = 1.0, t = 1.0;
    std::string method = "spectral", route = "spectral";
    int cutoff = 64;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", out_dir, "output directory for reports");
        sub->add_option("--seed", seed, "sample seed")->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--threads", threads, "worker threads for sweeps");
    };

    auto* frft = app.add_subcommand("frft", "fractional Fourier transform of a grid file");
    frft->add_option("--alpha", alpha, "transform order")->required();
    frft->add_option("--in", in_path, "input grid CSV")->required();
    frft->add_option("--out-file", out_path, "output grid CSV")->required();
    frft->add_option("--method", method, "spectral | chirp");
    frft->add_option("--cutoff", cutoff, "Hermite cutoff for the spectral route");
    add_common(frft);

    auto* hflow = app.add_subcommand("hermite-flow", "Hermite-Schrödinger flow of a grid file");
    hflow->add_option("--lambda", lambda, "potential scale")->required();
    hflow->add_option("--t", t, "time")->required();
    hflow->add_option("--in", in_path, "input grid CSV")->required();
    hflow->add_option("--out-file", out_path, "output grid CSV")->required();
    hflow->add_option("--route", route, "spectral | frft");
    hflow->add_option("--cutoff", cutoff, "Hermite cutoff");
    add_common(hflow);

    auto* sflow = app.add_subcommand("special-flow", "twisted Schrödinger flow of a grid file");
    sflow->add_option("--lambda", lambda, "twist parameter")->required();
    sflow->add_option("--t", t, "time")->required();
    sflow->add_option("--in", in_path, "input grid CSV")->required();
    sflow->add_option("--out-file", out_path, "output grid CSV")->required();
    add_common(sflow);

    auto* hobs = app.add_subcommand("hermite-observe", "two-point observability experiment (Hermite flow)");
    hobs->add_option("--config", config_path, "experiment config JSON")->required();
    add_common(hobs);

    auto* obs = app.add_subcommand("observe", "two-point observability experiment (twisted flow)");
    obs->add_option("--config", config_path, "experiment config JSON")->required();
    add_common(obs);

    auto* st = app.add_subcommand("set-translate", "translation search and bounded construction");
    st->add_option("--config", config_path, "experiment config JSON")->required();
    add_common(st);

    auto* cal = app.add_subcommand("calibrate", "convention calibrations and residuals");
    add_common(cal);

    auto* sweep = app.add_subcommand("sweep", "parameter sweep of an experiment template");
    sweep->add_option("--config", config_path, "sweep config JSON")->required();
    add_common(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2
    }

    if (frft->parsed()) {
        json p = {{"mode", "frft"}, {"alpha", alpha}, {"in", in_path}, {"out", out_path},
                  {"method", method}, {"cutoff", cutoff}};
        return run_inline_mode(p, out_dir, seed, seed_set, threads);
    }
    if (hflow->parsed()) {
        json p = {{"mode", "hermite-flow"}, {"lambda", lambda}, {"t", t}, {"in", in_path},
                  {"out", out_path}, {"route", route}, {"cutoff", cutoff}};
        return run_inline_mode(p, out_dir, seed, seed_set, threads);
    }
    if (sflow->parsed()) {
        json p = {{"mode", "special-flow"}, {"lambda", lambda}, {"t", t}, {"in", in_path},
                  {"out", out_path}};
        return run_inline_mode(p, out_dir, seed, seed_set, threads);
    }
    if (cal->parsed()) {
        json p = {{"mode", "calibrate"}};
        return run_inline_mode(p, out_dir, seed, seed_set, threads);
    }
    return run_config_mode(config_path, out_dir, seed, seed_set, threads);
}
