#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bdsde/core.hpp"
#include "bdsde/errors.hpp"
#include "bdsde/expr.hpp"
#include "bdsde/horizon.hpp"
#include "bdsde/oracle.hpp"
#include "bdsde/solver.hpp"

namespace bdsde {

enum class ExperimentKind { solve, compare, ito_check, gronwall, oracle_diff, assumptions };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::solve: return "solve";
        case ExperimentKind::compare: return "compare";
        case ExperimentKind::ito_check: return "ito_check";
        case ExperimentKind::gronwall: return "gronwall";
        case ExperimentKind::oracle_diff: return "oracle_diff";
        case ExperimentKind::assumptions: return "assumptions";
    }
    return "?";
}

/// One problem: either the built-in "example7" (with a terminal-condition
/// choice) or an inline definition through coefficient expressions.
struct ProblemConfig {
    bool builtin = false;
    // builtin
    std::string xi_kind = "constant";  // "constant" | "exp_capped"
    double xi_c = 1.0;
    double xi_cap = 1.0;
    // inline
    Dimensions dims{1, 1, 1};
    std::vector<std::string> f;                  // k expressions
    std::vector<std::string> g;                  // k*l expressions, row-major
    std::string v, u;                            // weight expressions over t
    std::optional<std::string> xi_expr;          // over w1..wd
    std::vector<double> xi_const;                // else constant vector, size k
    std::vector<std::string> backward_features;  // expressions over t
};

struct GridConfig {
    std::optional<double> T;
    std::size_t steps = 128;
    double tail_budget = 0.01;
    std::string kind = "uniform";  // "uniform" | "geometric"
    double growth = 1.05;
};

struct McConfig {
    std::size_t paths = 4096;
    std::uint64_t seed = 1;
};

struct SolverPart {
    std::size_t picard_max = 20;
    double picard_tol = 1e-3;
    std::size_t inner_iters = 3;
    double ridge_lambda = 1e-8;
    std::string mode = "coupled";  // "coupled" | "picard_frozen"
};

struct OutputConfig {
    std::string path = "results.csv";
    std::string format = "csv";  // "csv" | "json"
};

struct ItoConfig {
    double T = 1.0;
    std::vector<std::size_t> steps_list = {64, 128, 256};
    std::string beta = "0", gamma = "1", delta = "1";  // expressions over t
    std::vector<double> alpha0 = {1.0};
    bool adapted_alpha0 = false;  // alpha0 = -int_0^T gamma dB per path
};

struct GronwallConfig {
    double A = 1.0;
    double M = 1.0;
    std::string r;
    std::optional<std::string> m;
    double t_max = 8.0;
    std::size_t points = 33;
};

struct OracleConfig {
    std::size_t inner_paths = 256;
};

struct CompareConfig {
    double violation_budget = 0.01;
    bool refine_scheme_tol = true;
    std::size_t h4_samples = 2000;
    double h4_box = 5.0;
};

struct AssumptionsConfig {
    std::size_t h2_samples = 2000;
    double box = 10.0;
    double quad_tol = 1e-8;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::solve;
    std::vector<ProblemConfig> problems;
    GridConfig grid;
    McConfig mc;
    SolverPart solver;
    OutputConfig output;
    ItoConfig ito;
    GronwallConfig gronwall;
    OracleConfig oracle;
    CompareConfig compare;
    AssumptionsConfig assumptions;

    std::vector<std::string> applied_defaults;
    nlohmann::ordered_json effective;  // config echo including applied defaults
};

namespace cfgdetail {

using json = nlohmann::ordered_json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ValidationError("unknown key: " + where + it.key());
    }
}

template <class T>
T get_or_default(const json& obj, const std::string& key, const std::string& where, T def,
                 std::vector<std::string>& defaults, json& echo) {
    if (obj.contains(key)) {
        try {
            T v = obj.at(key).get<T>();
            echo[key] = v;
            return v;
        } catch (const json::exception&) {
            throw ValidationError(where + key + " has the wrong type");
        }
    }
    echo[key] = def;
    defaults.push_back(where + key);
    return def;
}

inline ProblemConfig parse_problem(const json& obj, const std::string& where,
                                   std::vector<std::string>& defaults, json& echo) {
    ProblemConfig p;
    if (!obj.is_object()) throw ValidationError(where + " must be an object");
    if (obj.contains("name")) {
        reject_unknown(obj, {"name", "xi"}, where + ".");
        const auto name = obj.at("name").get<std::string>();
        if (name != "example7")
            throw ValidationError(where + ".name: unknown built-in problem '" + name + "'");
        p.builtin = true;
        echo["name"] = name;
        json xi_echo = json::object();
        if (obj.contains("xi")) {
            const json& xi = obj.at("xi");
            reject_unknown(xi, {"kind", "c", "cap"}, where + ".xi.");
            p.xi_kind = get_or_default<std::string>(xi, "kind", where + ".xi.", "constant",
                                                    defaults, xi_echo);
            p.xi_c = get_or_default<double>(xi, "c", where + ".xi.", 1.0, defaults, xi_echo);
            p.xi_cap = get_or_default<double>(xi, "cap", where + ".xi.", 1.0, defaults, xi_echo);
        } else {
            xi_echo = {{"kind", "constant"}, {"c", 1.0}, {"cap", 1.0}};
            defaults.push_back(where + ".xi");
        }
        if (p.xi_kind != "constant" && p.xi_kind != "exp_capped")
            throw ValidationError(where + ".xi.kind must be 'constant' or 'exp_capped'");
        echo["xi"] = xi_echo;
        return p;
    }

    reject_unknown(obj, {"k", "d", "l", "f", "g", "v", "u", "xi", "backward_features"},
                   where + ".");
    p.builtin = false;
    p.dims.k = get_or_default<int>(obj, "k", where + ".", 1, defaults, echo);
    p.dims.d = get_or_default<int>(obj, "d", where + ".", 1, defaults, echo);
    p.dims.l = get_or_default<int>(obj, "l", where + ".", 1, defaults, echo);
    try {
        p.dims.validate();
    } catch (const std::exception& e) {
        throw ValidationError(where + ": " + e.what());
    }
    for (const char* key : {"f", "g", "v", "u"})
        if (!obj.contains(key)) throw ValidationError(where + "." + key + " is required");
    p.f = obj.at("f").get<std::vector<std::string>>();
    p.g = obj.at("g").get<std::vector<std::string>>();
    p.v = obj.at("v").get<std::string>();
    p.u = obj.at("u").get<std::string>();
    echo["f"] = p.f;
    echo["g"] = p.g;
    echo["v"] = p.v;
    echo["u"] = p.u;
    if (p.f.size() != static_cast<std::size_t>(p.dims.k))
        throw ValidationError(where + ".f must hold k expressions");
    if (p.g.size() != static_cast<std::size_t>(p.dims.k * p.dims.l))
        throw ValidationError(where + ".g must hold k*l expressions");

    if (!obj.contains("xi")) throw ValidationError(where + ".xi is required");
    const json& xi = obj.at("xi");
    reject_unknown(xi, {"kind", "source", "value"}, where + ".xi.");
    const auto kind = xi.at("kind").get<std::string>();
    json xi_echo = json::object();
    xi_echo["kind"] = kind;
    if (kind == "expr") {
        p.xi_expr = xi.at("source").get<std::string>();
        xi_echo["source"] = *p.xi_expr;
    } else if (kind == "constant") {
        p.xi_const = xi.at("value").get<std::vector<double>>();
        if (p.xi_const.size() != static_cast<std::size_t>(p.dims.k))
            throw ValidationError(where + ".xi.value must hold k numbers");
        xi_echo["value"] = p.xi_const;
    } else {
        throw ValidationError(where + ".xi.kind must be 'constant' or 'expr'");
    }
    echo["xi"] = xi_echo;
    if (obj.contains("backward_features")) {
        p.backward_features = obj.at("backward_features").get<std::vector<std::string>>();
        echo["backward_features"] = p.backward_features;
    } else {
        echo["backward_features"] = json::array();
        defaults.push_back(where + ".backward_features");
    }
    return p;
}

}  // namespace cfgdetail

/// Parses and validates an experiment config. Unknown keys are rejected;
/// every field that falls back to its default is recorded in
/// applied_defaults (and echoed in `effective`).
inline ExperimentConfig parse_config(std::string_view text) {
    using cfgdetail::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // nlohmann reports a byte offset; surface it as a column.
        throw ParseError(std::string("config is not valid JSON: ") + e.what(), 1,
                         static_cast<int>(e.byte));
    }
    if (!root.is_object()) throw ValidationError("config root must be a JSON object");

    ExperimentConfig cfg;
    auto& defaults = cfg.applied_defaults;
    json echo = json::object();

    if (!root.contains("experiment")) throw ValidationError("experiment is required");
    const auto exp_name = root.at("experiment").get<std::string>();
    echo["experiment"] = exp_name;
    if (exp_name == "solve") cfg.experiment = ExperimentKind::solve;
    else if (exp_name == "compare") cfg.experiment = ExperimentKind::compare;
    else if (exp_name == "ito_check") cfg.experiment = ExperimentKind::ito_check;
    else if (exp_name == "gronwall") cfg.experiment = ExperimentKind::gronwall;
    else if (exp_name == "oracle_diff") cfg.experiment = ExperimentKind::oracle_diff;
    else if (exp_name == "assumptions") cfg.experiment = ExperimentKind::assumptions;
    else throw ValidationError("experiment must be one of solve, compare, ito_check, gronwall, "
                               "oracle_diff, assumptions");

    // Which top-level sections each experiment accepts.
    std::set<std::string> allowed = {"experiment", "output"};
    switch (cfg.experiment) {
        case ExperimentKind::solve: allowed.insert({"problem", "grid", "mc", "solver"}); break;
        case ExperimentKind::compare:
            allowed.insert({"problems", "grid", "mc", "solver", "compare"});
            break;
        case ExperimentKind::ito_check: allowed.insert({"ito", "mc"}); break;
        case ExperimentKind::gronwall: allowed.insert({"gronwall"}); break;
        case ExperimentKind::oracle_diff:
            allowed.insert({"problem", "grid", "mc", "solver", "oracle"});
            break;
        case ExperimentKind::assumptions:
            allowed.insert({"problem", "problems", "grid", "mc", "assumptions"});
            break;
    }
    cfgdetail::reject_unknown(root, allowed, "");

    // Problems.
    if (root.contains("problem")) {
        json pecho = json::object();
        cfg.problems.push_back(
            cfgdetail::parse_problem(root.at("problem"), "problem", defaults, pecho));
        echo["problem"] = pecho;
    }
    if (root.contains("problems")) {
        const json& arr = root.at("problems");
        if (!arr.is_array()) throw ValidationError("problems must be an array");
        json arr_echo = json::array();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            json pecho = json::object();
            cfg.problems.push_back(cfgdetail::parse_problem(
                arr.at(i), "problems[" + std::to_string(i) + "]", defaults, pecho));
            arr_echo.push_back(pecho);
        }
        echo["problems"] = arr_echo;
    }
    switch (cfg.experiment) {
        case ExperimentKind::solve:
        case ExperimentKind::oracle_diff:
            if (cfg.problems.size() != 1)
                throw ValidationError("this experiment requires exactly one problem");
            break;
        case ExperimentKind::compare:
            if (cfg.problems.size() != 2)
                throw ValidationError("compare requires exactly two problems");
            break;
        case ExperimentKind::assumptions:
            if (cfg.problems.empty() || cfg.problems.size() > 2)
                throw ValidationError("assumptions requires one or two problems");
            break;
        default: break;
    }
    if (cfg.experiment == ExperimentKind::compare) {
        const Dimensions d1 = cfg.problems[0].builtin ? Dimensions{1, 1, 1} : cfg.problems[0].dims;
        const Dimensions d2 = cfg.problems[1].builtin ? Dimensions{1, 1, 1} : cfg.problems[1].dims;
        if (!(d1 == d2)) throw ValidationError("problems.dims: the two problems must share k, d, l");
    }
    if (cfg.experiment == ExperimentKind::oracle_diff && !cfg.problems[0].builtin)
        throw ValidationError("oracle_diff requires the built-in example7 problem");

    const json empty = json::object();
    // Grid.
    if (allowed.count("grid")) {
        const json& g = root.contains("grid") ? root.at("grid") : empty;
        if (!root.contains("grid")) defaults.push_back("grid");
        cfgdetail::reject_unknown(g, {"T", "steps", "tail_budget", "kind", "growth"}, "grid.");
        json gecho = json::object();
        if (g.contains("T")) {
            cfg.grid.T = g.at("T").get<double>();
            gecho["T"] = *cfg.grid.T;
            if (!(*cfg.grid.T > 0.0)) throw ValidationError("grid.T must be positive");
        }
        cfg.grid.steps = cfgdetail::get_or_default<std::size_t>(g, "steps", "grid.", 128, defaults,
                                                                gecho);
        if (cfg.grid.steps < 1) throw ValidationError("grid.steps must be ≥ 1");
        cfg.grid.tail_budget = cfgdetail::get_or_default<double>(g, "tail_budget", "grid.", 0.01,
                                                                 defaults, gecho);
        if (!(cfg.grid.tail_budget > 0.0))
            throw ValidationError("grid.tail_budget must be positive");
        cfg.grid.kind =
            cfgdetail::get_or_default<std::string>(g, "kind", "grid.", "uniform", defaults, gecho);
        if (cfg.grid.kind != "uniform" && cfg.grid.kind != "geometric")
            throw ValidationError("grid.kind must be 'uniform' or 'geometric'");
        cfg.grid.growth =
            cfgdetail::get_or_default<double>(g, "growth", "grid.", 1.05, defaults, gecho);
        if (!(cfg.grid.growth > 0.0)) throw ValidationError("grid.growth must be positive");
        echo["grid"] = gecho;
    }

    // Monte Carlo.
    if (allowed.count("mc")) {
        const json& m = root.contains("mc") ? root.at("mc") : empty;
        if (!root.contains("mc")) defaults.push_back("mc");
        cfgdetail::reject_unknown(m, {"paths", "seed"}, "mc.");
        json mecho = json::object();
        cfg.mc.paths =
            cfgdetail::get_or_default<std::size_t>(m, "paths", "mc.", 4096, defaults, mecho);
        if (cfg.mc.paths < 1) throw ValidationError("mc.paths must be ≥ 1");
        cfg.mc.seed =
            cfgdetail::get_or_default<std::uint64_t>(m, "seed", "mc.", 1, defaults, mecho);
        echo["mc"] = mecho;
    }

    // Solver.
    if (allowed.count("solver")) {
        const json& s = root.contains("solver") ? root.at("solver") : empty;
        if (!root.contains("solver")) defaults.push_back("solver");
        cfgdetail::reject_unknown(
            s, {"picard_max", "picard_tol", "inner_iters", "ridge_lambda", "mode"}, "solver.");
        json secho = json::object();
        cfg.solver.picard_max = cfgdetail::get_or_default<std::size_t>(s, "picard_max", "solver.",
                                                                       20, defaults, secho);
        cfg.solver.picard_tol = cfgdetail::get_or_default<double>(s, "picard_tol", "solver.", 1e-3,
                                                                  defaults, secho);
        cfg.solver.inner_iters = cfgdetail::get_or_default<std::size_t>(s, "inner_iters",
                                                                        "solver.", 3, defaults,
                                                                        secho);
        cfg.solver.ridge_lambda = cfgdetail::get_or_default<double>(s, "ridge_lambda", "solver.",
                                                                    1e-8, defaults, secho);
        cfg.solver.mode = cfgdetail::get_or_default<std::string>(s, "mode", "solver.", "coupled",
                                                                 defaults, secho);
        if (cfg.solver.mode != "coupled" && cfg.solver.mode != "picard_frozen")
            throw ValidationError("solver.mode must be 'coupled' or 'picard_frozen'");
        if (cfg.solver.picard_max < 1) throw ValidationError("solver.picard_max must be ≥ 1");
        if (cfg.solver.inner_iters < 1) throw ValidationError("solver.inner_iters must be ≥ 1");
        if (!(cfg.solver.ridge_lambda >= 0.0))
            throw ValidationError("solver.ridge_lambda must be ≥ 0");
        echo["solver"] = secho;
    }

    // Experiment-specific sections.
    if (cfg.experiment == ExperimentKind::ito_check) {
        if (!root.contains("ito")) throw ValidationError("ito section is required");
        const json& it = root.at("ito");
        cfgdetail::reject_unknown(
            it, {"T", "steps_list", "beta", "gamma", "delta", "alpha0", "adapted_alpha0"}, "ito.");
        json iecho = json::object();
        cfg.ito.T = cfgdetail::get_or_default<double>(it, "T", "ito.", 1.0, defaults, iecho);
        if (!(cfg.ito.T > 0.0)) throw ValidationError("ito.T must be positive");
        cfg.ito.steps_list = cfgdetail::get_or_default<std::vector<std::size_t>>(
            it, "steps_list", "ito.", {64, 128, 256}, defaults, iecho);
        if (cfg.ito.steps_list.empty()) throw ValidationError("ito.steps_list must be nonempty");
        cfg.ito.beta = cfgdetail::get_or_default<std::string>(it, "beta", "ito.", "0", defaults,
                                                              iecho);
        cfg.ito.gamma = cfgdetail::get_or_default<std::string>(it, "gamma", "ito.", "1", defaults,
                                                               iecho);
        cfg.ito.delta = cfgdetail::get_or_default<std::string>(it, "delta", "ito.", "1", defaults,
                                                               iecho);
        cfg.ito.alpha0 = cfgdetail::get_or_default<std::vector<double>>(it, "alpha0", "ito.",
                                                                        {1.0}, defaults, iecho);
        cfg.ito.adapted_alpha0 = cfgdetail::get_or_default<bool>(it, "adapted_alpha0", "ito.",
                                                                 false, defaults, iecho);
        echo["ito"] = iecho;
    }
    if (cfg.experiment == ExperimentKind::gronwall) {
        if (!root.contains("gronwall")) throw ValidationError("gronwall section is required");
        const json& gw = root.at("gronwall");
        cfgdetail::reject_unknown(gw, {"A", "M", "r", "m", "t_max", "points"}, "gronwall.");
        json gecho = json::object();
        cfg.gronwall.A = cfgdetail::get_or_default<double>(gw, "A", "gronwall.", 1.0, defaults,
                                                           gecho);
        cfg.gronwall.M = cfgdetail::get_or_default<double>(gw, "M", "gronwall.", 1.0, defaults,
                                                           gecho);
        if (!gw.contains("r")) throw ValidationError("gronwall.r is required");
        cfg.gronwall.r = gw.at("r").get<std::string>();
        gecho["r"] = cfg.gronwall.r;
        if (gw.contains("m")) {
            cfg.gronwall.m = gw.at("m").get<std::string>();
            gecho["m"] = *cfg.gronwall.m;
        }
        cfg.gronwall.t_max = cfgdetail::get_or_default<double>(gw, "t_max", "gronwall.", 8.0,
                                                               defaults, gecho);
        cfg.gronwall.points = cfgdetail::get_or_default<std::size_t>(gw, "points", "gronwall.", 33,
                                                                     defaults, gecho);
        if (cfg.gronwall.points < 2) throw ValidationError("gronwall.points must be ≥ 2");
        if (!(cfg.gronwall.A >= 0.0)) throw ValidationError("gronwall.A must be ≥ 0");
        if (!(cfg.gronwall.M > 0.0)) throw ValidationError("gronwall.M must be > 0");
        echo["gronwall"] = gecho;
    }
    if (cfg.experiment == ExperimentKind::oracle_diff) {
        const json& oc = root.contains("oracle") ? root.at("oracle") : empty;
        if (!root.contains("oracle")) defaults.push_back("oracle");
        cfgdetail::reject_unknown(oc, {"inner_paths"}, "oracle.");
        json oecho = json::object();
        cfg.oracle.inner_paths = cfgdetail::get_or_default<std::size_t>(oc, "inner_paths",
                                                                        "oracle.", 256, defaults,
                                                                        oecho);
        if (cfg.oracle.inner_paths < 1) throw ValidationError("oracle.inner_paths must be ≥ 1");
        echo["oracle"] = oecho;
    }
    if (cfg.experiment == ExperimentKind::compare) {
        const json& cc = root.contains("compare") ? root.at("compare") : empty;
        if (!root.contains("compare")) defaults.push_back("compare");
        cfgdetail::reject_unknown(cc,
                                  {"violation_budget", "refine_scheme_tol", "h4_samples",
                                   "h4_box"},
                                  "compare.");
        json cecho = json::object();
        cfg.compare.violation_budget = cfgdetail::get_or_default<double>(
            cc, "violation_budget", "compare.", 0.01, defaults, cecho);
        cfg.compare.refine_scheme_tol = cfgdetail::get_or_default<bool>(
            cc, "refine_scheme_tol", "compare.", true, defaults, cecho);
        cfg.compare.h4_samples = cfgdetail::get_or_default<std::size_t>(cc, "h4_samples",
                                                                        "compare.", 2000, defaults,
                                                                        cecho);
        cfg.compare.h4_box = cfgdetail::get_or_default<double>(cc, "h4_box", "compare.", 5.0,
                                                               defaults, cecho);
        echo["compare"] = cecho;
    }
    if (cfg.experiment == ExperimentKind::assumptions) {
        const json& ac = root.contains("assumptions") ? root.at("assumptions") : empty;
        if (!root.contains("assumptions")) defaults.push_back("assumptions");
        cfgdetail::reject_unknown(ac, {"h2_samples", "box", "quad_tol"}, "assumptions.");
        json aecho = json::object();
        cfg.assumptions.h2_samples = cfgdetail::get_or_default<std::size_t>(
            ac, "h2_samples", "assumptions.", 2000, defaults, aecho);
        cfg.assumptions.box = cfgdetail::get_or_default<double>(ac, "box", "assumptions.", 10.0,
                                                                defaults, aecho);
        cfg.assumptions.quad_tol = cfgdetail::get_or_default<double>(ac, "quad_tol",
                                                                     "assumptions.", 1e-8,
                                                                     defaults, aecho);
        echo["assumptions"] = aecho;
    }

    // Output.
    {
        const json& o = root.contains("output") ? root.at("output") : empty;
        if (!root.contains("output")) defaults.push_back("output");
        cfgdetail::reject_unknown(o, {"path", "format"}, "output.");
        json oecho = json::object();
        cfg.output.format = cfgdetail::get_or_default<std::string>(o, "format", "output.", "csv",
                                                                   defaults, oecho);
        if (cfg.output.format != "csv" && cfg.output.format != "json")
            throw ValidationError("output.format must be 'csv' or 'json'");
        cfg.output.path = cfgdetail::get_or_default<std::string>(
            o, "path", "output.", std::string("results.") + cfg.output.format, defaults, oecho);
        echo["output"] = oecho;
    }

    cfg.effective = echo;
    return cfg;
}

/// Materializes a ProblemSpec from its config (expressions compiled to
/// closures).
inline ProblemSpec build_problem(const ProblemConfig& pc) {
    if (pc.builtin) {
        const auto kind = pc.xi_kind == "constant" ? LinearExampleSpec::XiKind::constant
                                                   : LinearExampleSpec::XiKind::exp_capped_wt;
        return make_example7_problem(kind, pc.xi_c, pc.xi_cap);
    }
    ProblemSpec prob;
    prob.dims = pc.dims;
    const auto k = static_cast<std::size_t>(pc.dims.k);
    const auto d = static_cast<std::size_t>(pc.dims.d);
    const auto l = static_cast<std::size_t>(pc.dims.l);

    std::vector<expr::Expression> f_exprs, g_exprs, feat_exprs;
    for (const auto& s : pc.f) f_exprs.push_back(expr::parse(s, pc.dims, expr::Slot::drift));
    for (const auto& s : pc.g)
        g_exprs.push_back(expr::parse(s, pc.dims, expr::Slot::backward_load));
    expr::Expression v_expr = expr::parse(pc.v, pc.dims, expr::Slot::time_only);
    expr::Expression u_expr = expr::parse(pc.u, pc.dims, expr::Slot::time_only);
    for (const auto& s : pc.backward_features)
        feat_exprs.push_back(expr::parse(s, pc.dims, expr::Slot::time_only));

    const int dd = pc.dims.d;
    prob.coefficients.f = [f_exprs, dd](double t, std::span<const double> y,
                                        std::span<const double> z, std::span<double> out) {
        expr::EvalContext ctx;
        ctx.t = t;
        ctx.y = y;
        ctx.z = z;
        ctx.d = dd;
        for (std::size_t r = 0; r < f_exprs.size(); ++r) out[r] = f_exprs[r].eval(ctx);
    };
    prob.coefficients.g = [g_exprs, dd](double t, std::span<const double> y,
                                        std::span<double> out) {
        expr::EvalContext ctx;
        ctx.t = t;
        ctx.y = y;
        ctx.d = dd;
        for (std::size_t r = 0; r < g_exprs.size(); ++r) out[r] = g_exprs[r].eval(ctx);
    };
    prob.coefficients.weights.v = [v_expr](double t) {
        expr::EvalContext ctx;
        ctx.t = t;
        return v_expr.eval(ctx);
    };
    prob.coefficients.weights.u = [u_expr](double t) {
        expr::EvalContext ctx;
        ctx.t = t;
        return u_expr.eval(ctx);
    };
    if (pc.xi_expr) {
        expr::Expression xi = expr::parse(*pc.xi_expr, pc.dims, expr::Slot::terminal);
        prob.terminal.evaluator = [xi, k, d](const PathView& path, std::span<double> out) {
            double wt[64];
            for (std::size_t a = 0; a < d; ++a) wt[a] = path.W_T(a);
            expr::EvalContext ctx;
            ctx.w = {wt, d};
            // One expression produces a scalar xi broadcast over components
            // would be surprising; require k = 1 for expression terminals.
            out[0] = xi.eval(ctx);
            for (std::size_t r = 1; r < k; ++r) out[r] = out[0];
        };
    } else {
        const std::vector<double> c = pc.xi_const;
        prob.terminal.evaluator = [c](const PathView&, std::span<double> out) {
            for (std::size_t r = 0; r < c.size(); ++r) out[r] = c[r];
        };
    }
    for (const auto& fe : feat_exprs) {
        prob.backward_features.push_back([fe](double t) {
            expr::EvalContext ctx;
            ctx.t = t;
            return fe.eval(ctx);
        });
    }
    (void)l;
    return prob;
}

}  // namespace bdsde
