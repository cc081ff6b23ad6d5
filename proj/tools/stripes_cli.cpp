// stripes: command-line front end for the stripe-energy library.
//
// Usage: stripes <command> [config=FILE] key=value ...
// Commands: params, lambda-table, optimal-period, convexity-scan, abc-check,
//           rate-scan, profile-energy, minimize-profile, rp-probe,
//           grid-energy, grid-decompose, grid-distance, grid-classify,
//           grid-anneal, grid-lipschitz
//
// Every run writes <out>.json (full report, config echo + hash) and, where a
// table is produced, <out>.csv.  Exit codes: 0 success, 1 error,
// 2 falsification events.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <format>
#include <fstream>
#include <iostream>
#include <random>

#include "json.hpp"
#include "stripes/analytic.hpp"
#include "stripes/grid.hpp"
#include "stripes/io.hpp"
#include "stripes/kernel.hpp"
#include "stripes/profile.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace stripes;
using cli::RunConfig;

namespace {

struct Outcome {
    ordered_json payload;
    std::vector<std::string> falsifications;
    std::vector<std::string> outputs;
};

KernelParams params_from(const RunConfig& cfg) {
    return make_params(cfg.get_int("d"), cfg.get_double("p"),
                       cfg.get_double("tau"),
                       cfg.get_int_or("verify", 0) != 0);
}

std::string out_prefix(const RunConfig& cfg) {
    return cfg.get_or("out", cfg.command);
}

GridSet load_or_make_grid(const RunConfig& cfg, const KernelParams& kp,
                          std::vector<std::string>& falsifications) {
    (void)falsifications;
    const std::string gen = cfg.get_or("gen", "file");
    const int d = kp.d;
    GridSet g;
    if (gen == "file") {
        const fs::path path = cfg.get("grid");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw cli::ConfigError("cannot open grid file");
        if (path.extension() == ".json") {
            std::string text((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
            auto [gg, gkp] = grid_from_json(text);
            g = std::move(gg);
        } else {
            std::vector<std::uint8_t> data(
                (std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
            auto [gg, gkp] = grid_from_binary(data);
            g = std::move(gg);
        }
    } else {
        const int n = cfg.get_int("n");
        if (gen == "stripes") {
            g = make_stripes(d, n, cfg.get_double("alpha"),
                             cfg.get_int("period_cells"),
                             cfg.get_int_or("direction", 0));
        } else if (gen == "checkerboard") {
            g = make_checkerboard(d, n, cfg.get_int("cell"));
        } else if (gen == "disc") {
            if (d != 2) throw cli::ConfigError("gen=disc requires d=2");
            g = make_disc(n, cfg.get_double("alpha"));
        } else if (gen == "random") {
            g = make_random(d, n, cfg.get_double("alpha"), cfg.get_seed());
        } else {
            throw cli::ConfigError(std::format("unknown gen '{}'", gen));
        }
    }
    // box size: explicit L, or L=auto fits `periods` optimal periods
    const std::string L = cfg.get_or("L", "auto");
    if (L == "auto") {
        const double alpha =
            cfg.has("alpha") ? cfg.get_double("alpha") : g.alpha();
        const double hs = optimal_period(kp, alpha).h_star;
        g.L = 2.0 * hs * cfg.get_int_or("periods", 1);
    } else {
        g.L = std::stod(L);
    }
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------

Outcome run_params(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "verify", "out", "jc_tol"});
    const KernelParams kp = make_params(cfg.get_int("d"), cfg.get_double("p"),
                                        cfg.get_double("tau"), true);
    Outcome o;
    o.payload["d"] = kp.d;
    o.payload["p"] = kp.p;
    o.payload["tau"] = kp.tau;
    o.payload["beta"] = kp.beta;
    o.payload["q"] = kp.q;
    o.payload["c1"] = kp.c1;
    o.payload["eps"] = kp.eps;
    o.payload["jc_diagnostic"] =
        jc_diagnostic(kp, cfg.get_double_or("jc_tol", 1e-8));
    return o;
}

Outcome run_lambda_table(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "alpha", "tol", "out"});
    const KernelParams kp = params_from(cfg);
    const double tol = cfg.get_double_or("tol", 1e-12);
    const auto alphas = cfg.get_range("alpha");
    Outcome o;
    cli::CsvWriter csv(out_prefix(cfg) + ".csv", cfg.hash(),
                       {"alpha", "h_star", "lambda", "d_alpha", "d2_alpha"});
    ordered_json rows = ordered_json::array();
    for (const double a : alphas) {
        const LambdaSample s = lambda_value(kp, a, tol);
        csv.row({s.alpha, s.h_star, s.lambda, s.d_alpha, s.d2_alpha});
        rows.push_back({{"alpha", s.alpha},
                        {"h_star", s.h_star},
                        {"lambda", s.lambda},
                        {"d_alpha", s.d_alpha},
                        {"d2_alpha", s.d2_alpha}});
    }
    o.payload["rows"] = std::move(rows);
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_optimal_period(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "alpha", "tol", "out"});
    const KernelParams kp = params_from(cfg);
    const double tol = cfg.get_double_or("tol", 1e-12);
    Outcome o;
    cli::CsvWriter csv(out_prefix(cfg) + ".csv", cfg.hash(),
                       {"alpha", "h_star", "certificate", "sign_changes"});
    for (const double a : cfg.get_range("alpha")) {
        const PeriodResult r = optimal_period(kp, a, tol);
        csv.row({a, r.h_star, r.certificate, double(r.sign_changes)});
        if (r.anomaly)
            o.falsifications.push_back(std::format(
                "optimal_period anomaly at alpha={}: {} sign changes", a,
                r.sign_changes));
    }
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_convexity_scan(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "alpha", "tol", "out"});
    const KernelParams kp = params_from(cfg);
    const auto alphas = cfg.get_range("alpha");
    const ConvexityScan scan =
        convexity_scan(kp, alphas, cfg.get_double_or("tol", 1e-12));
    Outcome o;
    cli::CsvWriter csv(out_prefix(cfg) + ".csv", cfg.hash(),
                       {"alpha", "d2_alpha", "floor_ratio"});
    for (const auto& row : scan.rows)
        csv.row({row.alpha, row.d2_alpha, row.floor_ratio});
    o.payload["c_tilde"] = scan.c_tilde;
    o.payload["c2_fit"] = scan.c2_fit;
    o.falsifications = scan.falsifications;
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_abc_check(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "alpha", "tol", "out"});
    const KernelParams kp =
        make_params(cfg.get_int("d"), cfg.get_double("p"), 0.0);
    Outcome o;
    cli::CsvWriter csv(out_prefix(cfg) + ".csv", cfg.hash(),
                       {"alpha", "A1", "A2", "A3", "margin", "sum_abs_a3"});
    for (const double a : cfg.get_range("alpha")) {
        const AbcResult r =
            abc_inequality_check(kp, a, cfg.get_double_or("tol", 1e-12));
        csv.row({a, r.A1, r.A2, r.A3, r.margin, r.sum_abs_a3});
        if (!(r.margin > 0))
            o.falsifications.push_back(
                std::format("A1 A2 - A3^2 = {} <= 0 at alpha={}", r.margin, a));
    }
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_rate_scan(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "alpha", "tol", "out"});
    const int d = cfg.get_int("d");
    const double p = cfg.get_double("p");
    const auto taus = cfg.get_range("tau");
    const auto alphas = cfg.get_range("alpha");
    const RateScanResult r =
        perturbation_rates(d, p, taus, alphas, cfg.get_double_or("tol", 1e-12));
    Outcome o;
    o.payload["slope_tau_f"] = r.slope_tau_f;
    o.payload["slope_tau_df"] = r.slope_tau_df;
    o.payload["slope_tau_d2f"] = r.slope_tau_d2f;
    o.payload["slope_alpha_f"] = r.slope_alpha_f;
    o.payload["slope_alpha_df"] = r.slope_alpha_df;
    o.payload["slope_alpha_d2f"] = r.slope_alpha_d2f;
    o.payload["expected_slope_tau"] = 1.0 / (p - d - 1);
    o.payload["h_band"] = {r.h_band_min, r.h_band_max};
    o.payload["d2f_band"] = {r.d2f_band_min, r.d2f_band_max};
    return o;
}

Outcome run_profile_energy(const RunConfig& cfg) {
    cfg.restrict_keys({"profiles", "tol", "out"});
    const fs::path path = cfg.get("profiles");
    std::ifstream in(path);
    if (!in) throw cli::ConfigError("cannot open profiles file");
    const double tol = cfg.get_double_or("tol", 1e-10);
    Outcome o;
    cli::CsvWriter csv(
        out_prefix(cfg) + ".csv", cfg.hash(),
        {"index", "L", "m", "density", "energy_density", "tail_bound"});
    ordered_json rows = ordered_json::array();
    std::string line;
    int idx = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto [prof, kp] = profile_from_json(line);
        const EnergyBreakdown eb = profile_energy(kp, prof, tol);
        csv.row({double(idx), prof.period, double(prof.boundaries.size()),
                 prof.density(), eb.total_density, eb.tail_bound});
        rows.push_back({{"index", idx},
                        {"energy_density", eb.total_density},
                        {"per_boundary_r", eb.per_boundary_r},
                        {"image_cutoff", eb.image_cutoff},
                        {"tail_bound", eb.tail_bound}});
        ++idx;
    }
    o.payload["profiles"] = std::move(rows);
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_minimize_profile(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "alpha", "L", "m_pairs", "grid_n",
                       "method", "profiles", "noise", "seed", "tol", "out"});
    const KernelParams kp = params_from(cfg);
    const std::string method = cfg.get_or("method", "local");
    Outcome o;
    SearchResult res;
    if (method == "brute") {
        res = brute_force_min(kp, cfg.get_int("m_pairs"),
                              cfg.get_double("alpha"), cfg.get_double("L"),
                              cfg.get_int("grid_n"));
    } else if (method == "local") {
        PeriodicProfile init;
        if (cfg.has("profiles")) {
            std::ifstream in(cfg.get("profiles"));
            std::string line;
            if (!in || !std::getline(in, line))
                throw cli::ConfigError("cannot read init profile");
            init = profile_from_json(line).first;
        } else {
            const double alpha = cfg.get_double("alpha");
            const double L = cfg.get_double("L");
            const int mp = cfg.get_int_or("m_pairs", 1);
            // equal stripes of the requested multiplicity
            init.period = L;
            for (int j = 0; j < mp; ++j) {
                init.boundaries.push_back(j * L / mp);
                init.boundaries.push_back(j * L / mp + alpha * L / mp);
            }
        }
        const double noise = cfg.get_double_or("noise", 0.0);
        if (noise > 0) {
            std::mt19937_64 rng(cfg.get_seed());
            std::uniform_real_distribution<double> u(-noise, noise);
            const double target = init.density();
            for (double& b : init.boundaries) b += u(rng);
            std::sort(init.boundaries.begin(), init.boundaries.end());
            init = project_density(init, target);
        }
        SearchOptions opts;
        opts.tol = cfg.get_double_or("tol", 1e-10);
        res = constrained_local_search(kp, init, opts);
    } else {
        throw cli::ConfigError("method must be 'local' or 'brute'");
    }
    const std::string pout = out_prefix(cfg) + "_profile.jsonl";
    std::ofstream pf(pout, std::ios::binary);
    pf << profile_to_json(res.profile, kp) << "\n";
    o.payload["energy"] = res.energy;
    o.payload["iterations"] = res.iterations;
    o.payload["converged"] = res.converged;
    o.payload["boundaries"] = res.profile.boundaries;
    o.payload["L"] = res.profile.period;
    o.outputs.push_back(pout);
    return o;
}

Outcome run_rp_probe(const RunConfig& cfg) {
    cfg.restrict_keys(
        {"d", "p", "tau", "alpha", "L", "samples", "m_max", "seed", "tol", "out"});
    const KernelParams kp = params_from(cfg);
    const RpProbeReport rep = rp_probe(
        kp, cfg.get_int_or("samples", 1000), cfg.get_int_or("m_max", 6),
        cfg.get_double("alpha"), cfg.get_double("L"), cfg.get_seed(),
        cfg.get_double_or("tol", 1e-6));
    Outcome o;
    cli::CsvWriter csv(out_prefix(cfg) + ".csv", cfg.hash(),
                       {"samples", "violations", "min_margin", "lambda",
                        "empirical_c0"});
    csv.row({double(rep.samples), double(rep.violations), rep.min_margin,
             rep.lambda, rep.empirical_c0});
    o.payload["samples"] = rep.samples;
    o.payload["violations"] = rep.violations;
    o.payload["min_margin"] = rep.min_margin;
    o.payload["lambda"] = rep.lambda;
    o.payload["empirical_c0"] = rep.empirical_c0;
    if (!rep.falsifications.empty()) {
        const std::string vpath = out_prefix(cfg) + "_violations.jsonl";
        std::ofstream vf(vpath, std::ios::binary);
        for (const auto& f : rep.falsifications) {
            vf << f << "\n";
            o.falsifications.push_back(f);
        }
        o.outputs.push_back(vpath);
    }
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_grid_energy(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "n", "L", "periods", "alpha", "gen",
                       "grid", "period_cells", "direction", "cell", "seed",
                       "out"});
    const KernelParams kp = params_from(cfg);
    Outcome o;
    GridSet g = load_or_make_grid(cfg, kp, o.falsifications);
    const GridEvaluator ev(kp, g.d, g.n, g.L);
    const GridEnergy e = ev.energy(g);
    cli::CsvWriter csv(out_prefix(cfg) + ".csv", cfg.hash(),
                       {"n", "L", "alpha", "energy", "per1", "repulsion",
                        "tail_bound"});
    csv.row({double(g.n), g.L, g.alpha(), e.value, e.per1, e.repulsion,
             e.tail_bound});
    o.payload["energy"] = e.value;
    o.payload["per1"] = e.per1;
    o.payload["repulsion"] = e.repulsion;
    o.payload["tail_bound"] = e.tail_bound;
    o.payload["alpha"] = g.alpha();
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_grid_decompose(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "n", "L", "periods", "alpha", "gen",
                       "grid", "period_cells", "direction", "cell", "seed",
                       "out"});
    const KernelParams kp = params_from(cfg);
    Outcome o;
    GridSet g = load_or_make_grid(cfg, kp, o.falsifications);
    const GridEvaluator ev(kp, g.d, g.n, g.L);
    const DecompositionReport rep = ev.decomposition(g);
    cli::CsvWriter csv(out_prefix(cfg) + ".csv", cfg.hash(),
                       {"direction", "r_total", "v_total", "w_total"});
    for (int i = 0; i < g.d; ++i)
        csv.row({double(i + 1), rep.r_total[i], rep.v_total[i], rep.w_total[i]});
    o.payload["energy"] = rep.energy;
    o.payload["rhs_total"] = rep.rhs_total;
    o.payload["slack"] = rep.slack;
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_grid_distance(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "n", "L", "periods", "alpha", "gen",
                       "grid", "period_cells", "direction", "cell", "eta",
                       "seed", "out"});
    const KernelParams kp = params_from(cfg);
    Outcome o;
    GridSet g = load_or_make_grid(cfg, kp, o.falsifications);
    const double eta = cfg.get_double_or("eta", 0.0);
    cli::CsvWriter csv(out_prefix(cfg) + ".csv", cfg.hash(),
                       {"direction", "eta", "value"});
    std::array<int, 3> corner{0, 0, 0}, extent{g.n, g.n, g.n};
    double dmin = 2.0;
    for (int i = 0; i < g.d; ++i) {
        const StripeDistance s = stripe_distance(g, corner, extent, i, eta);
        csv.row({double(i + 1), eta, s.value});
        dmin = std::min(dmin, s.value);
    }
    o.payload["d_eta_min"] = dmin;
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_grid_classify(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "n", "L", "periods", "alpha", "gen",
                       "grid", "period_cells", "direction", "cell", "l_cells",
                       "eta", "delta", "rho", "enlarge_mixed", "seed", "out"});
    const KernelParams kp = params_from(cfg);
    Outcome o;
    GridSet g = load_or_make_grid(cfg, kp, o.falsifications);
    RegionParams rp;
    rp.l_cells = cfg.get_int("l_cells");
    rp.eta = cfg.get_double_or("eta", 0.0);
    rp.delta = cfg.get_double("delta");
    rp.rho = cfg.get_double_or("rho", 0.0);
    rp.enlarge_mixed = cfg.get_double_or("enlarge_mixed", 1.0);
    const RegionLabels labels = classify_regions(g, rp);
    cli::CsvWriter csv(out_prefix(cfg) + ".csv", cfg.hash(),
                       {"label", "count"});
    const char* names[5] = {"mixed", "unresolved", "A_1", "A_2", "A_3"};
    for (int i = 0; i < 5; ++i)
        csv.row_mixed({names[i], std::to_string(labels.counts[i])});
    o.payload["counts"] = labels.counts;
    o.payload["ambiguities"] = labels.ambiguities;
    ordered_json larr = ordered_json::array();
    for (const auto v : labels.label) larr.push_back(int(v));
    o.payload["labels"] = std::move(larr);
    o.outputs.push_back(out_prefix(cfg) + ".csv");
    return o;
}

Outcome run_grid_anneal(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "n", "L", "periods", "alpha", "moves",
                       "t0", "t1", "hold", "pboundary", "chains", "trace_every",
                       "check_every", "eta", "seed", "out"});
    const KernelParams kp = params_from(cfg);
    const int n = cfg.get_int("n");
    const double alpha = cfg.get_double("alpha");
    double L;
    if (cfg.get_or("L", "auto") == "auto") {
        const double hs = optimal_period(kp, alpha).h_star;
        L = 2.0 * hs * cfg.get_int_or("periods", 2);
    } else {
        L = cfg.get_double("L");
    }
    const GridEvaluator ev(kp, kp.d, n, L);
    AnnealSchedule sched;
    sched.moves = (long long)cfg.get_double_or("moves", 2e6);
    sched.t_start = cfg.get_double_or("t0", 0.25);
    sched.t_end = cfg.get_double_or("t1", 0.01);
    sched.hold_fraction = cfg.get_double_or("hold", 0.3);
    sched.p_boundary = cfg.get_double_or("pboundary", 0.8);
    sched.chains = cfg.get_int_or("chains", 1);
    sched.trace_every = (long long)cfg.get_double_or("trace_every", 20000);
    sched.check_every = (long long)cfg.get_double_or("check_every", 10000);
    sched.eta_trace = cfg.get_double_or("eta", 0.0);
    const AnnealResult res = anneal(ev, alpha, sched, cfg.get_seed());

    const std::string prefix = out_prefix(cfg);
    cli::CsvWriter csv(prefix + "_trace.csv", cfg.hash(),
                       {"move", "energy", "d_eta", "temperature"});
    for (const auto& row : res.trace)
        csv.row({double(row.move), row.energy, row.d_eta, row.temperature});
    {
        const auto bin = grid_to_binary(res.grid, kp);
        std::ofstream bf(prefix + "_grid.bin", std::ios::binary);
        bf.write(reinterpret_cast<const char*>(bin.data()),
                 std::streamsize(bin.size()));
        std::ofstream jf(prefix + "_grid.json", std::ios::binary);
        jf << grid_to_json(res.grid, kp) << "\n";
    }
    Outcome o;
    o.payload["final_energy"] = res.energy;
    o.payload["winning_chain"] = res.winning_chain;
    o.payload["max_incremental_error"] = res.max_incremental_error;
    std::array<int, 3> corner{0, 0, 0}, extent{n, n, n};
    ordered_json dists = ordered_json::array();
    for (int i = 0; i < kp.d; ++i)
        dists.push_back(
            stripe_distance(res.grid, corner, extent, i, sched.eta_trace).value);
    o.payload["d_eta"] = std::move(dists);
    o.payload["period_cells"] = {estimate_period_cells(res.grid, 0),
                                 estimate_period_cells(res.grid, 1)};
    o.outputs.push_back(prefix + "_trace.csv");
    o.outputs.push_back(prefix + "_grid.bin");
    o.outputs.push_back(prefix + "_grid.json");
    if (res.max_incremental_error > 1e-8)
        o.falsifications.push_back(
            std::format("incremental energy drift {} exceeds 1e-8",
                        res.max_incremental_error));
    return o;
}

Outcome run_grid_lipschitz(const RunConfig& cfg) {
    cfg.restrict_keys({"d", "p", "tau", "n", "L", "periods", "alpha", "gen",
                       "grid", "period_cells", "direction", "cell", "l_cells",
                       "eta", "pairs", "seed", "out"});
    const KernelParams kp = params_from(cfg);
    Outcome o;
    GridSet g = load_or_make_grid(cfg, kp, o.falsifications);
    const LipschitzReport rep =
        lipschitz_probe(g, cfg.get_int("l_cells"), cfg.get_double_or("eta", 0.0),
                        cfg.get_int_or("pairs", 1000), cfg.get_seed());
    o.payload["max_ratio"] = rep.max_ratio;
    o.payload["mean_ratio"] = rep.mean_ratio;
    o.payload["pairs"] = rep.pairs;
    return o;
}

int run(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: stripes <command> [config=FILE] key=value ...\n";
        return 1;
    }
    const std::string command = argv[1];
    std::vector<std::string> tokens(argv + 2, argv + argc);
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = cli::parse_config(command, tokens);
    Outcome o;
    if (command == "params") o = run_params(cfg);
    else if (command == "lambda-table") o = run_lambda_table(cfg);
    else if (command == "optimal-period") o = run_optimal_period(cfg);
    else if (command == "convexity-scan") o = run_convexity_scan(cfg);
    else if (command == "abc-check") o = run_abc_check(cfg);
    else if (command == "rate-scan") o = run_rate_scan(cfg);
    else if (command == "profile-energy") o = run_profile_energy(cfg);
    else if (command == "minimize-profile") o = run_minimize_profile(cfg);
    else if (command == "rp-probe") o = run_rp_probe(cfg);
    else if (command == "grid-energy") o = run_grid_energy(cfg);
    else if (command == "grid-decompose") o = run_grid_decompose(cfg);
    else if (command == "grid-distance") o = run_grid_distance(cfg);
    else if (command == "grid-classify") o = run_grid_classify(cfg);
    else if (command == "grid-anneal") o = run_grid_anneal(cfg);
    else if (command == "grid-lipschitz") o = run_grid_lipschitz(cfg);
    else {
        std::cerr << std::format("unknown command '{}'\n", command);
        return 1;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    ordered_json report;
    report["command"] = command;
    ordered_json cfg_echo = ordered_json::object();
    for (const auto& [k, v] : cfg.entries) cfg_echo[k] = v;
    report["config"] = std::move(cfg_echo);
    report["config_hash"] = std::format("{:016x}", cfg.hash());
    report["library_version"] = cli::kVersion;
    report["wall_time_s"] = wall;
    report["warnings"] = cfg.warnings;
    report["falsifications"] = o.falsifications;
    report["outputs"] = o.outputs;
    report["result"] = std::move(o.payload);

    const std::string jpath = out_prefix(cfg) + ".json";
    std::ofstream jf(jpath, std::ios::binary);
    jf << report.dump(2) << "\n";
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << report["result"].dump(2) << "\n";
    if (!o.falsifications.empty()) {
        for (const auto& f : o.falsifications)
            std::cerr << "falsification: " << f << "\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
