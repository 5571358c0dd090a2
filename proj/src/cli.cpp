#include "hiermodel/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "hiermodel/errors.hpp"
#include "hiermodel/io.hpp"

namespace hiermodel::cli {

namespace {

using io::json;

constexpr std::array<const char*, 8> verbs{"solve-qn", "fesc",   "task-makespan", "txn-lock",
                                           "simulate", "hybrid", "epa",           "validate"};

struct Common {
    std::string input;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
};

void add_common(CLI::App& app, Common& c, bool input_required) {
    auto* in = app.add_option("-i,--input", c.input, "Model file (JSON; CSV drift table for epa)");
    if (input_required) in->required();
    app.add_option("-o,--output", c.output, "Report path (default: standard output)");
}

void add_seed(CLI::App& app, Common& c, const std::string& what) {
    app.add_option("--seed", c.seed, "Random seed " + what);
}

void add_tol(CLI::App& app, Common& c, const std::string& what) {
    app.add_option("--tol", c.tol, what);
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ModelError("cannot write " + path);
    f << text;
}

void emit(const Common& c, const json& report, std::ostream& out) {
    write_text(c.output, report.dump(2) + "\n", out);
}

json load(const std::string& path) { return io::parse_json(io::read_file(path), path); }

std::vector<int> parse_population(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ModelError("population entries must be integers: " + s);
        }
    }
    return out;
}

// Each verb registers its options on `app` and returns the action to run once parsed.
using Runner = std::function<int(std::ostream&)>;

Runner setup_solve_qn(CLI::App& app, Common& c) {
    add_common(app, c, true);
    auto pop = std::make_shared<std::string>();
    auto table = std::make_shared<bool>(false);
    app.add_option("--population", *pop, "Comma-separated class populations (default: document, else all 1)");
    app.add_flag("--table", *table, "Also emit T_j over the whole population lattice");
    return [&c, pop, table](std::ostream& out) {
        json doc = load(c.input);
        const auto model = io::qn_from_json(doc);
        std::vector<int> population;
        if (!pop->empty())
            population = parse_population(*pop);
        else if (doc.contains("population"))
            population = doc.at("population").get<std::vector<int>>();
        else
            population.assign(model.classes, 1);
        json input = io::to_json(model);
        input["population"] = population;
        json report{{"input", input}, {"solution", io::to_json(mva_solve(model, population))}};
        if (*table) report["table"] = io::to_json(mva_multi(model, population));
        emit(c, report, out);
        return ok;
    };
}

Runner setup_fesc(CLI::App& app, Common& c) {
    add_common(app, c, true);
    add_tol(app, c, "Relative truncation epsilon of the birth-death recursion (default 1e-12)");
    auto lambda = std::make_shared<std::optional<double>>();
    auto m_max = std::make_shared<std::optional<int>>();
    app.add_option("--lambda", *lambda, "Poisson arrival rate (overrides the document)");
    app.add_option("--m-max", *m_max, "MPL cap M_max (overrides the document)");
    return [&c, lambda, m_max](std::ostream& out) {
        json doc = load(c.input);
        std::vector<double> curve;
        if (doc.contains("throughput") && doc.contains("dims")) {
            curve = io::table_from_json(doc).single_class_curve();
        } else if (doc.contains("table")) {
            curve = io::table_from_json(doc.at("table")).single_class_curve();
        } else if (doc.contains("model")) {
            const auto model = io::qn_from_json(doc.at("model"));
            if (model.classes != 1) throw ModelError("FESC needs a single-class network");
            const int k = m_max->value_or(doc.value("m_max", 0));
            if (k < 1) throw ModelError("m_max is required with a network model");
            for (const auto& s : mva_single(model, k)) curve.push_back(s.throughput[0]);
        } else if (doc.contains("rates")) {
            curve = doc.at("rates").get<std::vector<double>>();
        } else {
            throw ModelError("fesc input needs a throughput table, a network model or a rates list");
        }
        const int m = m_max->value_or(doc.value("m_max", static_cast<int>(curve.size())));
        const double lam = lambda->has_value() ? **lambda : doc.value("lambda", -1.0);
        if (!(lam > 0.0)) throw ModelError("lambda must be given and positive");
        const double eps = c.tol.value_or(doc.value("epsilon", default_birth_death_epsilon));
        const auto ch = flatten(curve, m);
        const auto sol = solve_birth_death(lam, ch, eps);
        json input{{"rates", ch.rates}, {"m_max", m}, {"lambda", lam}, {"epsilon", eps}};
        emit(c, {{"input", input}, {"solution", io::to_json(sol)}}, out);
        return ok;
    };
}

Runner setup_task_makespan(CLI::App& app, Common& c) {
    add_common(app, c, true);
    auto rule = std::make_shared<std::string>("conditional");
    auto dot = std::make_shared<std::string>();
    auto max_mpl = std::make_shared<std::size_t>(max_tasks);
    auto text = std::make_shared<std::string>();
    app.add_option("--rule", *rule, "Delay combination rule")->check(CLI::IsMember({"conditional", "literal"}));
    app.add_option("--max-mpl", *max_mpl, "Largest taskset allowed");
    app.add_option("--dot", *dot, "Write the level graph in Graphviz format");
    app.add_option("--text", *text, "Write a plain-text report table");
    return [&c, rule, dot, max_mpl, text](std::ostream& out) {
        const auto ts = io::task_system_from_json(load(c.input));
        ts.validate();
        SweepOptions opts;
        opts.rule = *rule == "literal" ? DelayRule::literal : DelayRule::conditional;
        opts.max_mpl = *max_mpl;
        const auto tp = mva_throughputs(ts);
        const auto report = analyze(ts, tp, opts);
        if (!dot->empty()) write_text(*dot, to_dot(ts, build_levels(ts, tp, opts)), out);
        if (!text->empty()) write_text(*text, format_report(ts, report), out);
        json input = io::to_json(ts);
        input["rule"] = *rule;
        input["max_mpl"] = *max_mpl;
        emit(c, {{"input", input}, {"report", io::to_json(ts, report)}}, out);
        return ok;
    };
}

std::string exec_label(const LockModel& m, const ExecComposition& s) {
    if (s.joint) return "S" + std::to_string(m.pair[0] + 1) + std::to_string(m.pair[1] + 1);
    return "S" + std::to_string(s.single + 1);
}

Runner setup_txn_lock(CLI::App& app, Common& c) {
    add_common(app, c, true);
    add_tol(app, c, "Convergence tolerance of the two-level chain solve (default 1e-13)");
    auto variant = std::make_shared<std::string>("symmetric");
    auto lambda = std::make_shared<std::optional<double>>();
    auto two_level = std::make_shared<bool>(false);
    auto max_iter = std::make_shared<std::optional<std::size_t>>();
    app.add_option("--matrix-variant", *variant, "Row for the third class")
        ->check(CLI::IsMember({"symmetric", "printed"}));
    app.add_option("--lambda", *lambda, "Arrival rate (overrides the document)");
    app.add_flag("--two-level", *two_level, "Also solve the exact (composition, population) chain");
    app.add_option("--max-iter", *max_iter, "Iteration budget of the two-level chain solve (default 5000000)");
    return [&c, variant, lambda, two_level, max_iter](std::ostream& out) {
        auto m = io::lock_from_json(load(c.input));
        if (lambda->has_value()) m.lambda = **lambda;
        m.validate();
        const auto v = *variant == "printed" ? MatrixVariant::printed : MatrixVariant::symmetric;
        const auto space = build_exec_matrix(m, v);
        const auto ss = solve_direct(space.chain);
        const auto agg = aggregate_throughputs(m, space, ss);
        json states = json::array();
        for (const auto& s : space.states) states.push_back(exec_label(m, s));
        json input = io::to_json(m);
        input["matrix_variant"] = *variant;
        json report{{"input", input},
                    {"states", states},
                    {"matrix", io::to_json(space.chain)},
                    {"pi", ss.pi},
                    {"throughput_2", agg.throughput},
                    {"total_throughput_2", agg.total},
                    {"n_bar_2", agg.n_bar},
                    {"single_throughput", agg.single_throughput}};
        if (m.lambda > 0.0) {
            const auto r = response_times(m, agg, m.lambda);
            report["n_bar"] = r.n_bar;
            report["response"] = r.response;
            report["birth_death"] = io::to_json(r.birth_death);
        }
        if (*two_level) {
            if (!(m.lambda > 0.0)) throw ModelError("the two-level chain needs a positive lambda");
            TwoLevelOptions opts;
            if (c.tol) opts.tol = *c.tol;
            if (max_iter->has_value()) opts.max_iter = **max_iter;
            const auto tl = solve_two_level(m, m.lambda, opts);
            report["two_level"] = {{"capacity", tl.capacity}, {"blocking", tl.blocking},
                                   {"n_bar", tl.n_bar},       {"response", tl.response},
                                   {"states", tl.states},     {"iterations", tl.iterations}};
        }
        emit(c, report, out);
        return ok;
    };
}

Runner setup_simulate(CLI::App& app, Common& c) {
    add_common(app, c, false);
    add_seed(app, c, "(default 1)");
    auto case_no = std::make_shared<std::optional<int>>();
    auto mode = std::make_shared<std::optional<std::string>>();
    auto csv = std::make_shared<std::string>();
    auto exact = std::make_shared<bool>(false);
    app.add_option("--case", *case_no, "Load a preset case (1..9)")->check(CLI::Range(1, 9));
    app.add_option("--mode", *mode, "Service-time mode (default memoryless)")
        ->check(CLI::IsMember({"memoryless", "literal"}));
    app.add_option("--csv", *csv, "Write batch means as CSV");
    app.add_flag("--exact", *exact, "Also solve the exact population chain");
    return [&c, case_no, mode, csv, exact](std::ostream& out) {
        TimesharingConfig cfg = case_no->has_value() ? preset_case(**case_no) : TimesharingConfig{};
        if (!c.input.empty()) cfg = io::timesharing_from_json(load(c.input), cfg);
        if (c.seed) cfg.seed = *c.seed;
        if (mode->has_value()) cfg.mode = **mode == "literal" ? ServiceMode::literal : ServiceMode::memoryless;
        cfg.validate();
        const auto rep = simulate(cfg);
        json report{{"input", io::to_json(cfg)}, {"report", io::to_json(rep)}};
        if (*exact) {
            const auto ex = solve_exact(cfg);
            report["exact"] = {{"response", ex.response}, {"throughput", ex.throughput},
                               {"n_bar", ex.n_bar},       {"states", ex.states}};
        }
        if (!csv->empty()) write_text(*csv, io::batch_csv(rep), out);
        emit(c, report, out);
        return ok;
    };
}

Runner setup_hybrid(CLI::App& app, Common& c) {
    add_common(app, c, true);
    add_seed(app, c, "for geometric cycle counts (default 1)");
    auto mode = std::make_shared<std::optional<std::string>>();
    auto reps = std::make_shared<std::optional<std::size_t>>();
    app.add_option("--mode", *mode, "cycles, residual or geometric (default: document, else cycles)")
        ->check(CLI::IsMember({"cycles", "residual", "geometric"}));
    app.add_option("--replications", *reps, "Replications of the geometric simulation (default 10000)");
    return [&c, mode, reps](std::ostream& out) {
        const json doc = load(c.input);
        const auto devices = io::stations_from_json(doc.at("devices"));
        const auto tasks = io::hybrid_tasks_from_json(doc);
        const std::string m = mode->value_or(doc.value("mode", std::string("cycles")));
        const std::uint64_t seed = c.seed.value_or(doc.value("seed", std::uint64_t{1}));
        json input{{"devices", io::to_json(devices)}, {"tasks", io::to_json(tasks)}, {"mode", m}, {"seed", seed}};
        json report;
        if (m == "cycles") {
            report = io::to_json(run_cycles(tasks, devices, seed), tasks);
        } else if (m == "residual") {
            report = io::to_json(run_residual(tasks, devices), tasks);
        } else if (m == "geometric") {
            const std::size_t n = reps->value_or(doc.value("replications", std::size_t{10000}));
            input["replications"] = n;
            report = {{"mean_completion", geometric_completion(tasks, devices)},
                      {"simulated", io::to_json(simulate_geometric(tasks, devices, n, seed))}};
        } else {
            throw ModelError("unknown hybrid mode " + m);
        }
        emit(c, {{"input", input}, {"report", report}}, out);
        return ok;
    };
}

Runner setup_epa(CLI::App& app, Common& c) {
    add_common(app, c, true);
    add_tol(app, c, "Bisection tolerance (default 1e-10 for drift tables, 1e-12 for terminal models)");
    return [&c](std::ostream& out) {
        const std::string text = io::read_file(c.input);
        const bool is_csv = c.input.size() >= 4 && c.input.substr(c.input.size() - 4) == ".csv";
        json report;
        if (is_csv) {
            const auto d = parse_drift_csv(text);
            const auto e = bisect_equilibrium(d, c.tol.value_or(1e-10));
            const auto ei = bisect_equilibrium_integer(d);
            report = {{"input", {{"drift_csv", text}, {"v", d.v}}},
                      {"equilibrium", {{"j_bar", e.j_bar}, {"j_rounded", e.j_rounded},
                                       {"boundary", e.boundary}, {"iterations", e.iterations}}},
                      {"integer",
                       {{"j", ei.j_rounded}, {"boundary", ei.boundary}, {"iterations", ei.iterations}}},
                      {"warnings", drift_diagnostics(d)}};
        } else {
            const auto tm = io::terminal_from_json(io::parse_json(text, c.input));
            const auto x = terminal_intersection(tm, c.tol.value_or(1e-12));
            const auto b = exact_terminal_balance(tm);
            report = {{"input", io::to_json(tm)},
                      {"intersection", {{"n_star", x.n_star}, {"boundary", x.boundary}, {"iterations", x.iterations}}},
                      {"exact", {{"p", b.p}, {"n_bar", b.n_bar}, {"throughput", b.throughput}}}};
        }
        emit(c, report, out);
        return ok;
    };
}

Runner setup_validate(CLI::App& app, Common& c) {
    auto paths = std::make_shared<std::vector<std::string>>();
    app.add_option("paths", *paths, "Model files to check")->required();
    app.add_option("-o,--output", c.output, "Report path (default: standard output)");
    return [&c, paths](std::ostream& out) {
        json files = json::array();
        bool clean = true;
        for (const auto& p : *paths) {
            std::vector<std::string> diag;
            try {
                diag = io::validate_document(load(p));
            } catch (const std::exception& e) {
                diag.emplace_back(e.what());
            }
            clean = clean && diag.empty();
            files.push_back({{"path", p}, {"diagnostics", diag}});
        }
        emit(c, {{"input", *paths}, {"files", files}}, out);
        return clean ? ok : model_error;
    };
}

Runner setup(const std::string& verb, CLI::App& app, Common& c) {
    if (verb == "solve-qn") return setup_solve_qn(app, c);
    if (verb == "fesc") return setup_fesc(app, c);
    if (verb == "task-makespan") return setup_task_makespan(app, c);
    if (verb == "txn-lock") return setup_txn_lock(app, c);
    if (verb == "simulate") return setup_simulate(app, c);
    if (verb == "hybrid") return setup_hybrid(app, c);
    if (verb == "epa") return setup_epa(app, c);
    return setup_validate(app, c);
}

}  // namespace

std::string usage() {
    std::string s = "usage: hiermodel <verb> [options]\n\nverbs:\n";
    const std::array<const char*, 8> help{
        "exact MVA of a closed network",
        "birth-death solution of a flow-equivalent center under Poisson load",
        "makespan of a task DAG via the leveled CTMC",
        "static-locking transaction model",
        "hierarchical timesharing simulation (preset cases via --case)",
        "hybrid cycle-counting / residual-demand simulation",
        "equilibrium point analysis (CSV drift or terminal model JSON)",
        "check model files without solving",
    };
    for (std::size_t i = 0; i < verbs.size(); ++i) {
        std::string v = verbs[i];
        v.resize(15, ' ');
        s += "  " + v + help[i] + "\n";
    }
    s += "\nRun 'hiermodel <verb> --help' for the options of a verb.\n"
         "Exit codes: 0 ok, 2 model error, 3 no convergence, 64 usage error.\n";
    return s;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty() || args[0] == "-h" || args[0] == "--help") {
        (args.empty() ? err : out) << usage();
        return args.empty() ? usage_error : ok;
    }
    const std::string& verb = args[0];
    if (std::find(verbs.begin(), verbs.end(), verb) == verbs.end()) {
        err << "unknown verb '" << verb << "'\n\n" << usage();
        return usage_error;
    }
    CLI::App app{"hiermodel " + verb};
    app.name("hiermodel " + verb);
    Common common;
    const Runner run = setup(verb, app, common);
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return usage_error;
    }
    try {
        return run(out);
    } catch (const ConvergenceError& e) {
        err << "no convergence: " << e.what() << " (residual " << e.residual() << " after " << e.iterations()
            << " iterations)\n";
        return no_convergence;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << "\n";
        return model_error;
    } catch (const nlohmann::json::exception& e) {
        err << "model error: " << e.what() << "\n";
        return model_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return model_error;
    }
}

}  // namespace hiermodel::cli
