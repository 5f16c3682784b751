#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "bdsde/comparison.hpp"
#include "bdsde/config.hpp"
#include "bdsde/gronwall.hpp"
#include "bdsde/ito.hpp"
#include "bdsde/oracle.hpp"
#include "bdsde/solver.hpp"
#include "bdsde/version.hpp"

namespace bdsde {

struct RunOptions {
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;
};

namespace rundetail {

using ordered_json = nlohmann::ordered_json;

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Result rows assembled as ordered JSON objects; the two writers below
/// render them as CSV (with a header row) or as a JSON document. Everything
/// written here is a pure function of config + seed, so reruns are
/// byte-identical; wall time and timestamps live only in the manifest.
struct Table {
    std::vector<std::string> columns;
    std::vector<ordered_json> rows;

    void add(ordered_json row) { rows.push_back(std::move(row)); }

    void write_csv(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open output file " + path.string());
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << (c ? "," : "") << columns[c];
        out << "\n";
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < columns.size(); ++c) {
                if (c) out << ",";
                const auto& v = row.at(columns[c]);
                if (v.is_number_float()) out << fmt(v.get<double>());
                else if (v.is_number_integer()) out << v.get<long long>();
                else if (v.is_number_unsigned()) out << v.get<unsigned long long>();
                else if (v.is_boolean()) out << (v.get<bool>() ? 1 : 0);
                else out << v.get<std::string>();
            }
            out << "\n";
        }
    }

    void write_json(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open output file " + path.string());
        ordered_json doc;
        doc["columns"] = columns;
        doc["rows"] = rows;
        out << doc.dump(2) << "\n";
    }

    void write(const std::filesystem::path& path, const std::string& format) const {
        if (format == "csv") write_csv(path);
        else write_json(path);
    }
};

inline TimeGrid build_grid(const GridConfig& gc, const LipschitzWeights& weights) {
    const double T = gc.T ? *gc.T : choose_truncation(weights, gc.tail_budget);
    if (gc.kind == "geometric") return TimeGrid::geometric(T, gc.steps, gc.growth);
    return TimeGrid::uniform(T, gc.steps);
}

inline SolverConfig build_solver_config(const ExperimentConfig& cfg) {
    SolverConfig sc;
    sc.n_paths = cfg.mc.paths;
    sc.seed = cfg.mc.seed;
    sc.picard_max = cfg.solver.picard_max;
    sc.picard_tol = cfg.solver.picard_tol;
    sc.inner_fixed_point_iters = cfg.solver.inner_iters;
    sc.ridge_lambda = cfg.solver.ridge_lambda;
    sc.mode = cfg.solver.mode == "picard_frozen" ? SolverConfig::Mode::picard_frozen
                                                 : SolverConfig::Mode::coupled;
    return sc;
}

}  // namespace rundetail

/// Executes one experiment: writes the results file and a run manifest into
/// opts.out_dir. Returns the process exit status: 0 on success, 2 on a
/// checked failure (assumption violated, comparison failed, non-convergence).
/// Errors (bad config, file problems) surface as exceptions; the CLI maps
/// them to exit 1.
inline int run(ExperimentConfig cfg, const RunOptions& opts) {
    using rundetail::Table;
    using rundetail::fmt;
    using ordered_json = nlohmann::ordered_json;
    namespace fs = std::filesystem;

    const auto t_start = std::chrono::steady_clock::now();
    if (opts.seed_override) {
        cfg.mc.seed = *opts.seed_override;
        if (cfg.effective.contains("mc")) cfg.effective["mc"]["seed"] = cfg.mc.seed;
    }
    fs::create_directories(opts.out_dir);
    const fs::path results_path = fs::path(opts.out_dir) / cfg.output.path;

    if (!opts.quiet) {
        for (const auto& name : cfg.applied_defaults)
            std::cerr << "default applied: " << name << "\n";
    }

    int exit_code = 0;
    Table table;
    ordered_json extra;  // experiment-specific manifest fields

    switch (cfg.experiment) {
        case ExperimentKind::solve: {
            ProblemSpec prob = build_problem(cfg.problems[0]);
            const TimeGrid grid =
                rundetail::build_grid(cfg.grid, prob.coefficients.weights);
            const SolverConfig sc = rundetail::build_solver_config(cfg);
            SolveResult res = solve(prob, grid, sc);
            const std::size_t P = sc.n_paths;
            const auto k = static_cast<std::size_t>(prob.dims.k);
            const auto d = static_cast<std::size_t>(prob.dims.d);
            table.columns = {"t", "component", "y_mean", "y_stderr", "z_mean", "z_stderr"};
            for (std::size_t i = 0; i <= grid.steps(); ++i) {
                for (std::size_t c = 0; c < k * d; ++c) {
                    const std::size_t j = c / d;
                    double ym = 0, y2 = 0, zm = 0, z2 = 0;
                    for (std::size_t p = 0; p < P; ++p) {
                        ym += res.pair.Y(p, i, j);
                        y2 += res.pair.Y(p, i, j) * res.pair.Y(p, i, j);
                        zm += res.pair.Z(p, i, c);
                        z2 += res.pair.Z(p, i, c) * res.pair.Z(p, i, c);
                    }
                    const double np = static_cast<double>(P);
                    ym /= np;
                    zm /= np;
                    const double yse = std::sqrt(std::max(0.0, y2 / np - ym * ym) / np);
                    const double zse = std::sqrt(std::max(0.0, z2 / np - zm * zm) / np);
                    table.add({{"t", grid.t(i)},
                               {"component", static_cast<long long>(c + 1)},
                               {"y_mean", ym},
                               {"y_stderr", yse},
                               {"z_mean", zm},
                               {"z_stderr", zse}});
                }
            }
            extra["converged"] = res.diagnostics.converged;
            extra["picard_deltas"] = res.diagnostics.picard_deltas;
            extra["horizon"] = grid.horizon();
            if (!res.diagnostics.converged) exit_code = 2;
            break;
        }
        case ExperimentKind::compare: {
            ComparisonSetup setup;
            setup.problem1 = build_problem(cfg.problems[0]);
            setup.problem2 = build_problem(cfg.problems[1]);
            setup.grid =
                rundetail::build_grid(cfg.grid, setup.problem1.coefficients.weights);
            setup.cfg = rundetail::build_solver_config(cfg);

            const H3Report h3a = check_h3(setup.problem1.coefficients.weights, 1e-8);
            const H3Report h3b = check_h3(setup.problem2.coefficients.weights, 1e-8);
            const H4Report h4 =
                check_h4_sampled(setup, cfg.compare.h4_samples, cfg.compare.h4_box, cfg.mc.seed);
            extra["h3_pass"] = h3a.pass && h3b.pass;
            extra["h4_pass"] = h4.pass;
            extra["h4_max_violation"] = h4.max_violation;
            extra["h4_terminal_violation"] = h4.terminal_violation;
            if (!(h3a.pass && h3b.pass && h4.pass)) {
                exit_code = 2;
                extra["aborted"] = "assumption check failed";
                table.columns = {"t", "component", "gap_mean", "gap_min", "gap_stderr"};
                break;
            }
            ComparisonReport rep =
                compare(setup, cfg.compare.violation_budget, cfg.compare.refine_scheme_tol);
            const auto k = static_cast<std::size_t>(setup.problem1.dims.k);
            const std::size_t P = setup.cfg.n_paths;

            // Re-derive per-time gap statistics for the CSV (compare() keeps
            // only the global extremes).
            const BrownianBundle bundle = generate_bundle(setup.grid, setup.problem1.dims, P,
                                                          setup.cfg.seed);
            SolveResult r1 = solve(setup.problem1, bundle, setup.cfg);
            SolveResult r2 = solve(setup.problem2, bundle, setup.cfg);
            table.columns = {"t", "component", "gap_mean", "gap_min", "gap_stderr"};
            for (std::size_t i = 0; i <= setup.grid.steps(); ++i) {
                for (std::size_t j = 0; j < k; ++j) {
                    double sum = 0, sum2 = 0, mn = std::numeric_limits<double>::infinity();
                    for (std::size_t p = 0; p < P; ++p) {
                        const double gap = r1.pair.Y(p, i, j) - r2.pair.Y(p, i, j);
                        sum += gap;
                        sum2 += gap * gap;
                        mn = std::min(mn, gap);
                    }
                    const double np = static_cast<double>(P);
                    const double mean = sum / np;
                    const double se = std::sqrt(std::max(0.0, sum2 / np - mean * mean) / np);
                    table.add({{"t", setup.grid.t(i)},
                               {"component", static_cast<long long>(j + 1)},
                               {"gap_mean", mean},
                               {"gap_min", mn},
                               {"gap_stderr", se}});
                }
            }
            extra["pass"] = rep.pass;
            extra["violation_fraction"] = rep.violation_fraction;
            extra["scheme_tol"] = rep.scheme_tol;
            extra["min_gap_per_component"] = rep.min_gap_per_component;
            extra["stderr_per_component"] = rep.stderr_per_component;
            if (!rep.pass) exit_code = 2;
            break;
        }
        case ExperimentKind::ito_check: {
            const Dimensions dims{1, 1, 1};
            const expr::Expression beta =
                expr::parse(cfg.ito.beta, dims, expr::Slot::time_only);
            const expr::Expression gamma =
                expr::parse(cfg.ito.gamma, dims, expr::Slot::time_only);
            const expr::Expression delta =
                expr::parse(cfg.ito.delta, dims, expr::Slot::time_only);
            table.columns = {"N", "pathwise_rms", "expectation_residual"};
            for (std::size_t N : cfg.ito.steps_list) {
                const TimeGrid grid = TimeGrid::uniform(cfg.ito.T, N);
                const BrownianBundle bundle =
                    generate_bundle(grid, dims, cfg.mc.paths, cfg.mc.seed);
                ItoQuadruple q;
                q.beta = ProcessArray(cfg.mc.paths, N + 1, 1);
                q.gamma = ProcessArray(cfg.mc.paths, N + 1, 1);
                q.delta = ProcessArray(cfg.mc.paths, N + 1, 1);
                for (std::size_t i = 0; i <= N; ++i) {
                    expr::EvalContext ctx;
                    ctx.t = grid.t(i);
                    const double bv = beta.eval(ctx), gv = gamma.eval(ctx), dv = delta.eval(ctx);
                    for (std::size_t p = 0; p < cfg.mc.paths; ++p) {
                        q.beta(p, i, 0) = bv;
                        q.gamma(p, i, 0) = gv;
                        q.delta(p, i, 0) = dv;
                    }
                }
                if (cfg.ito.adapted_alpha0) {
                    q.alpha0.assign(cfg.mc.paths, 0.0);
                    for (std::size_t p = 0; p < cfg.mc.paths; ++p) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < N; ++i)
                            acc += q.gamma(p, i + 1, 0) * bundle.dB(p, i, 0);
                        q.alpha0[p] = -acc;
                    }
                } else {
                    q.alpha0 = cfg.ito.alpha0;
                }
                const ItoCheckReport rep = ito_check(q, bundle);
                table.add({{"N", static_cast<long long>(N)},
                           {"pathwise_rms", rep.pathwise_residual_rms},
                           {"expectation_residual", rep.expectation_residual}});
                if (!std::isfinite(rep.pathwise_residual_rms) ||
                    !std::isfinite(rep.expectation_residual))
                    exit_code = 2;
            }
            break;
        }
        case ExperimentKind::gronwall: {
            const Dimensions dims{1, 1, 1};
            const expr::Expression r_expr =
                expr::parse(cfg.gronwall.r, dims, expr::Slot::time_only);
            GronwallProblem gp;
            gp.A = cfg.gronwall.A;
            gp.M = cfg.gronwall.M;
            gp.r = [r_expr](double t) {
                expr::EvalContext ctx;
                ctx.t = t;
                return r_expr.eval(ctx);
            };
            std::vector<double> ts(cfg.gronwall.points);
            for (std::size_t i = 0; i < ts.size(); ++i)
                ts[i] = cfg.gronwall.t_max * static_cast<double>(i) /
                        static_cast<double>(ts.size() - 1);
            table.columns = {"t", "bound"};
            try {
                for (double t : ts) table.add({{"t", t}, {"bound", gronwall_bound(gp, t)}});
                if (cfg.gronwall.m) {
                    const expr::Expression m_expr =
                        expr::parse(*cfg.gronwall.m, dims, expr::Slot::time_only);
                    gp.m = [m_expr](double t) {
                        expr::EvalContext ctx;
                        ctx.t = t;
                        return m_expr.eval(ctx);
                    };
                    const GronwallVerifyReport rep = gronwall_verify(gp, ts);
                    extra["hypothesis_holds"] = rep.hypothesis_holds;
                    extra["conclusion_holds"] = rep.conclusion_holds;
                    extra["hypothesis_tail_variant_holds"] = rep.hypothesis_tail_variant_holds;
                    if (rep.hypothesis_holds && !rep.conclusion_holds) exit_code = 2;
                }
            } catch (const NonConvergent& e) {
                extra["non_convergent"] = e.what();
                exit_code = 2;
            }
            break;
        }
        case ExperimentKind::oracle_diff: {
            const ProblemConfig& pc = cfg.problems[0];
            ProblemSpec prob = build_problem(pc);
            const TimeGrid grid =
                rundetail::build_grid(cfg.grid, prob.coefficients.weights);
            LinearExampleSpec spec;
            spec.xi_kind = pc.xi_kind == "constant" ? LinearExampleSpec::XiKind::constant
                                                    : LinearExampleSpec::XiKind::exp_capped_wt;
            spec.c = pc.xi_c;
            spec.cap = pc.xi_cap;
            spec.grid = grid;
            const SolverConfig sc = rundetail::build_solver_config(cfg);
            const BrownianBundle bundle = generate_bundle(grid, prob.dims, sc.n_paths, sc.seed);
            SolveResult res = solve(prob, bundle, sc);
            table.columns = {"t", "solver_value", "derived_oracle", "paper_formula", "ratio"};
            const std::size_t N = grid.steps();
            for (std::size_t idx : {std::size_t{0}, N / 4, N / 2}) {
                const auto derived = derived_linear_solution(
                    spec, bundle, idx, cfg.oracle.inner_paths, rng::derive_seed(sc.seed, 101));
                const auto paper = paper_explicit_form(spec, bundle, idx, cfg.oracle.inner_paths,
                                                       rng::derive_seed(sc.seed, 202));
                double sm = 0, dm = 0, pm = 0;
                for (std::size_t p = 0; p < sc.n_paths; ++p) {
                    sm += res.pair.Y(p, idx, 0);
                    dm += derived[p];
                    pm += paper[p];
                }
                const double np = static_cast<double>(sc.n_paths);
                table.add({{"t", grid.t(idx)},
                           {"solver_value", sm / np},
                           {"derived_oracle", dm / np},
                           {"paper_formula", pm / np},
                           {"ratio", (dm / np) / (pm / np)}});
            }
            extra["deterministic_factor_t0"] = derived_linear_factor(0.0, grid.horizon());
            break;
        }
        case ExperimentKind::assumptions: {
            table.columns = {"problem", "check", "value", "pass"};
            bool all_pass = true;
            for (std::size_t pi = 0; pi < cfg.problems.size(); ++pi) {
                ProblemSpec prob = build_problem(cfg.problems[pi]);
                const H3Report h3 =
                    check_h3(prob.coefficients.weights, cfg.assumptions.quad_tol);
                const H2Report h2 =
                    check_h2_sampled(prob.coefficients, prob.dims, cfg.assumptions.h2_samples,
                                     cfg.assumptions.box, cfg.mc.seed);
                all_pass = all_pass && h3.pass && h2.pass;
                const auto pid = static_cast<long long>(pi + 1);
                table.add({{"problem", pid},
                           {"check", "h3_v_integral"},
                           {"value", h3.v_integral},
                           {"pass", h3.v_converged}});
                table.add({{"problem", pid},
                           {"check", "h3_u2_integral"},
                           {"value", h3.u2_integral},
                           {"pass", h3.u2_converged}});
                table.add({{"problem", pid},
                           {"check", "h2_max_violation"},
                           {"value", h2.max_violation},
                           {"pass", h2.pass}});
            }
            if (cfg.problems.size() == 2) {
                ComparisonSetup setup;
                setup.problem1 = build_problem(cfg.problems[0]);
                setup.problem2 = build_problem(cfg.problems[1]);
                setup.grid =
                    rundetail::build_grid(cfg.grid, setup.problem1.coefficients.weights);
                setup.cfg = rundetail::build_solver_config(cfg);
                const H4Report h4 = check_h4_sampled(setup, cfg.assumptions.h2_samples,
                                                     cfg.assumptions.box, cfg.mc.seed);
                all_pass = all_pass && h4.pass;
                table.add({{"problem", 0},
                           {"check", "h4_max_violation"},
                           {"value", h4.max_violation},
                           {"pass", h4.pass}});
            }
            if (!all_pass) exit_code = 2;
            break;
        }
    }

    table.write(results_path, cfg.output.format);

    const auto t_end = std::chrono::steady_clock::now();
    const double wall =
        std::chrono::duration_cast<std::chrono::duration<double>>(t_end - t_start).count();

    ordered_json manifest;
    manifest["version"] = kVersion;
    manifest["experiment"] = to_string(cfg.experiment);
    manifest["seed"] = cfg.mc.seed;
    manifest["results_file"] = cfg.output.path;
    manifest["exit_code"] = exit_code;
    manifest["config"] = cfg.effective;
    manifest["applied_defaults"] = cfg.applied_defaults;
    manifest["report"] = extra;
    manifest["wall_time_seconds"] = wall;
    {
        // Timestamp lives only here; results files stay byte-identical.
        const std::time_t now = std::time(nullptr);
        char buf[32];
        std::tm tm_utc{};
        gmtime_r(&now, &tm_utc);
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        manifest["timestamp_utc"] = buf;
    }
    std::ofstream mout(std::filesystem::path(opts.out_dir) / "manifest.json", std::ios::binary);
    mout << manifest.dump(2) << "\n";

    if (!opts.quiet)
        std::cerr << "wrote " << results_path.string() << " (exit " << exit_code << ")\n";
    return exit_code;
}

}  // namespace bdsde
