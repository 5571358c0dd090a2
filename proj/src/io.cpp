#include "hiermodel/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hiermodel/errors.hpp"

namespace hiermodel::io {

namespace {

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ModelError(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

StationKind kind_from(const std::string& s) {
    if (s == "queueing") return StationKind::queueing;
    if (s == "delay") return StationKind::delay;
    throw ModelError("unknown station kind \"" + s + "\"");
}

std::vector<std::string> row_sum_problems(const RoutingMatrix& p) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].size() != p.size()) {
            out.push_back("routing row " + std::to_string(i + 1) + " has the wrong length");
            continue;
        }
        double sum = 0.0;
        for (double x : p[i]) sum += x;
        if (std::abs(sum - 1.0) > 1e-9)
            out.push_back("routing row " + std::to_string(i + 1) + " sums to " + std::to_string(sum));
    }
    return out;
}

template <typename F>
void collect(std::vector<std::string>& out, F&& build) {
    try {
        build();
    } catch (const std::exception& e) {
        out.emplace_back(e.what());
    }
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelError(origin + ": " + e.what());
    }
}

std::vector<Station> stations_from_json(const json& j) {
    if (j.is_number_integer()) return queueing_stations(j.get<std::size_t>());
    std::vector<Station> out;
    for (const auto& s : j) {
        Station st;
        st.id = static_cast<int>(out.size() + 1);
        st.name = value_or<std::string>(s, "name", "S" + std::to_string(st.id));
        st.kind = kind_from(value_or<std::string>(s, "kind", "queueing"));
        out.push_back(std::move(st));
    }
    return out;
}

json to_json(const std::vector<Station>& s) {
    json out = json::array();
    for (const auto& st : s)
        out.push_back({{"name", st.name}, {"kind", st.kind == StationKind::delay ? "delay" : "queueing"}});
    return out;
}

QnModel qn_from_json(const json& j) {
    auto stations = stations_from_json(require(j, "stations"));
    std::vector<std::vector<double>> demands;
    if (j.contains("routing")) {
        const auto p = j.at("routing").get<RoutingMatrix>();
        const auto problems = row_sum_problems(p);
        if (!problems.empty()) throw ModelError(problems.front());
        const auto service = require(j, "service_times").get<std::vector<double>>();
        const auto ref = value_or<std::size_t>(j, "reference", 1);
        if (ref < 1) throw ModelError("reference station is 1-based");
        const auto v = visits_from_routing(p, ref - 1);
        demands.push_back(demands_from_visits(v, service));
    } else {
        demands = require(j, "demands").get<std::vector<std::vector<double>>>();
    }
    auto think = value_or<std::vector<double>>(j, "think_times", {});
    auto m = make_model(std::move(stations), std::move(demands), std::move(think));
    if (j.contains("classes") && j.at("classes").get<std::size_t>() != m.classes)
        throw ModelError("\"classes\" disagrees with the number of demand rows");
    m.validate();
    return m;
}

json to_json(const QnModel& m) {
    json out{{"stations", to_json(m.stations)}, {"classes", m.classes}, {"demands", m.demands}};
    if (!m.think_times.empty()) out["think_times"] = m.think_times;
    return out;
}

json to_json(const MvaSolution& s) {
    json out{{"population", s.population},
             {"throughput", s.throughput},
             {"residence", s.residence},
             {"queue_len", s.queue_len}};
    std::vector<double> resp;
    for (std::size_t j = 0; j < s.throughput.size(); ++j) resp.push_back(s.response(j));
    out["response"] = resp;
    return out;
}

ThroughputTable table_from_json(const json& j) {
    ThroughputTable t(require(j, "dims").get<std::vector<int>>());
    const auto& rows = require(j, "throughput");
    if (rows.size() != t.size()) throw ModelError("throughput table has the wrong number of lattice points");
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto row = rows.at(i).get<std::vector<double>>();
        if (row.size() != t.classes()) throw ModelError("throughput row has the wrong number of classes");
        for (std::size_t c = 0; c < row.size(); ++c) t.set_throughput_at(i, c, row[c]);
    }
    return t;
}

json to_json(const ThroughputTable& t) {
    json rows = json::array();
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::vector<double> row(t.classes());
        for (std::size_t c = 0; c < t.classes(); ++c) row[c] = t.throughput_at(i, c);
        rows.push_back(row);
    }
    return {{"dims", t.max_population()}, {"throughput", rows}};
}

json to_json(const BirthDeathSolution& s) {
    return {{"p", s.p},           {"n_bar", s.n_bar},   {"n_memq", s.n_memq},
            {"r_system", s.r_system}, {"w_memq", s.w_memq}, {"truncation_mass", s.truncation_mass}};
}

Ctmc ctmc_from_json(const json& j) {
    const auto n = require(j, "n").get<std::size_t>();
    std::vector<Transition> tr;
    for (const auto& e : require(j, "entries")) {
        if (!e.is_array() || e.size() != 3) throw ModelError("CTMC entries are [i, j, rate]");
        tr.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
    }
    return Ctmc(n, tr, value_or<std::vector<std::string>>(j, "labels", {}));
}

json to_json(const Ctmc& c) {
    json entries = json::array();
    for (const auto& t : c.transitions()) entries.push_back(json::array({t.from, t.to, t.rate}));
    json out{{"n", c.size()}, {"entries", entries}};
    if (!c.labels().empty()) out["labels"] = c.labels();
    return out;
}

TaskSystem task_system_from_json(const json& j) {
    TaskSystem ts;
    for (const auto& t : require(j, "tasks"))
        ts.tasks.push_back({require(t, "id").get<int>(), require(t, "demands").get<std::vector<double>>()});
    if (j.contains("precedence"))
        for (const auto& e : j.at("precedence")) {
            if (!e.is_array() || e.size() != 2) throw ModelError("precedence entries are [pred, succ]");
            ts.precedence.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
    if (j.contains("stations")) ts.stations = stations_from_json(j.at("stations"));
    return ts;
}

json to_json(const TaskSystem& ts) {
    json tasks = json::array();
    for (const auto& t : ts.tasks) tasks.push_back({{"id", t.id}, {"demands", t.demands}});
    json prec = json::array();
    for (const auto& [a, b] : ts.precedence) prec.push_back(json::array({a, b}));
    json out{{"tasks", tasks}, {"precedence", prec}};
    if (!ts.stations.empty()) out["stations"] = to_json(ts.stations);
    return out;
}

json to_json(const TaskSystem& ts, const TaskReport& r) {
    json tasks = json::array();
    for (std::size_t i = 0; i < ts.tasks.size(); ++i)
        tasks.push_back({{"id", ts.tasks[i].id},
                         {"init", r.init[i]},
                         {"comp", r.comp[i]},
                         {"exec", r.exec[i]},
                         {"exec_from_probs", r.exec_alt[i]}});
    json probs = json::array();
    for (const auto& [s, p] : r.state_probs) probs.push_back({{"taskset", format_taskset(ts, s)}, {"p", p}});
    return {{"makespan", r.makespan},       {"tasks", tasks},
            {"state_probs", probs},         {"device_util", r.device_util},
            {"level_sizes", r.level_sizes}, {"final_path_prob", r.final_path_prob}};
}

LockModel lock_from_json(const json& j) {
    LockModel m;
    m.freqs = require(j, "freqs").get<std::vector<double>>();
    m.rates = require(j, "rates").get<std::vector<double>>();
    const auto jr = require(j, "joint_rates").get<std::vector<double>>();
    if (jr.size() != 2) throw ModelError("joint_rates needs two entries");
    m.joint_rates = {jr[0], jr[1]};
    if (j.contains("pair")) {
        const auto p = j.at("pair").get<std::vector<std::size_t>>();
        if (p.size() != 2 || p[0] < 1 || p[1] < 1) throw ModelError("pair names two 1-based classes");
        m.pair = {p[0] - 1, p[1] - 1};
    }
    m.lambda = value_or<double>(j, "lambda", 0.0);
    return m;
}

json to_json(const LockModel& m) {
    return {{"freqs", m.freqs},
            {"pair", json::array({m.pair[0] + 1, m.pair[1] + 1})},
            {"rates", m.rates},
            {"joint_rates", json::array({m.joint_rates[0], m.joint_rates[1]})},
            {"lambda", m.lambda}};
}

TimesharingConfig timesharing_from_json(const json& j, TimesharingConfig c) {
    const auto pair_of = [&](const char* key, auto& dst) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (!v.is_array() || v.size() != 2) throw ModelError(std::string("\"") + key + "\" needs two entries");
        dst[0] = v[0].get<std::remove_reference_t<decltype(dst[0])>>();
        dst[1] = v[1].get<std::remove_reference_t<decltype(dst[1])>>();
    };
    pair_of("terminals", c.terminals);
    pair_of("mpl", c.mpl);
    pair_of("think", c.think);
    pair_of("cpu_demand", c.cpu_demand);
    pair_of("disk_demand", c.disk_demand);
    pair_of("n_comp_target", c.n_comp_target);
    c.disks = value_or(j, "disks", c.disks);
    c.num_batches = value_or(j, "num_batches", c.num_batches);
    c.warmup_batches = value_or(j, "warmup_batches", c.warmup_batches);
    c.seed = value_or(j, "seed", c.seed);
    c.confidence = value_or(j, "confidence", c.confidence);
    if (j.contains("mode")) {
        const auto m = j.at("mode").get<std::string>();
        if (m == "memoryless")
            c.mode = ServiceMode::memoryless;
        else if (m == "literal")
            c.mode = ServiceMode::literal;
        else
            throw ModelError("mode must be memoryless or literal");
    }
    return c;
}

json to_json(const TimesharingConfig& c) {
    return {{"terminals", c.terminals},
            {"mpl", c.mpl},
            {"think", c.think},
            {"cpu_demand", c.cpu_demand},
            {"disk_demand", c.disk_demand},
            {"disks", c.disks},
            {"n_comp_target", c.n_comp_target},
            {"num_batches", c.num_batches},
            {"warmup_batches", c.warmup_batches},
            {"seed", c.seed},
            {"confidence", c.confidence},
            {"mode", c.mode == ServiceMode::memoryless ? "memoryless" : "literal"}};
}

json to_json(const ConfidenceInterval& ci) {
    return {{"mean", ci.mean}, {"half_width", ci.half_width}, {"samples", ci.samples}};
}

json to_json(const SimReport& r) {
    json classes = json::array();
    for (const auto& c : r.classes)
        classes.push_back({{"completions", c.completions},
                           {"response", to_json(c.response)},
                           {"throughput", to_json(c.throughput)},
                           {"in_system", to_json(c.in_system)}});
    return {{"classes", classes},
            {"simulated_time", r.simulated_time},
            {"measured_time", r.measured_time},
            {"events", r.events},
            {"seed", r.seed}};
}

std::string batch_csv(const SimReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << "batch,class,response,throughput\n";
    for (std::size_t j = 0; j < 2; ++j) {
        const auto& c = r.classes[j];
        for (std::size_t b = 0; b < c.batch_response.size(); ++b)
            out << b + 1 << ',' << j + 1 << ',' << c.batch_response[b] << ',' << c.batch_throughput[b] << '\n';
    }
    return out.str();
}

std::vector<HybridTask> hybrid_tasks_from_json(const json& j) {
    std::vector<HybridTask> out;
    for (const auto& t : require(j, "tasks")) {
        HybridTask h;
        h.id = require(t, "id").get<int>();
        h.demands = require(t, "demands").get<std::vector<double>>();
        h.arrival = value_or(t, "arrival", 0.0);
        if (t.contains("cycles")) {
            const auto& c = t.at("cycles");
            const auto kind = value_or<std::string>(c, "kind", "fixed");
            if (kind == "fixed")
                h.cycles.kind = CycleKind::fixed;
            else if (kind == "geometric")
                h.cycles.kind = CycleKind::geometric;
            else
                throw ModelError("cycle kind must be fixed or geometric");
            h.cycles.value = require(c, "value").get<double>();
        }
        out.push_back(std::move(h));
    }
    return out;
}

json to_json(const std::vector<HybridTask>& tasks) {
    json out = json::array();
    for (const auto& t : tasks)
        out.push_back({{"id", t.id},
                       {"demands", t.demands},
                       {"cycles",
                        {{"kind", t.cycles.kind == CycleKind::fixed ? "fixed" : "geometric"},
                         {"value", t.cycles.value}}},
                       {"arrival", t.arrival}});
    return out;
}

json to_json(const HybridResult& r, const std::vector<HybridTask>& tasks) {
    json per = json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i)
        per.push_back({{"id", tasks[i].id}, {"start", r.start[i]}, {"finish", r.finish[i]}});
    json epochs = json::array();
    for (const auto& e : r.epochs) {
        json ids = json::array();
        for (auto i : e.active) ids.push_back(tasks[i].id);
        epochs.push_back({{"time", e.time}, {"active", ids}, {"remaining", e.remaining}});
    }
    return {{"tasks", per}, {"makespan", r.makespan}, {"epochs", epochs}};
}

TerminalModel terminal_from_json(const json& j) {
    TerminalModel tm;
    tm.m = require(j, "m").get<int>();
    tm.z = require(j, "z").get<double>();
    if (j.contains("t")) {
        tm.t = j.at("t").get<std::vector<double>>();
    } else {
        const auto model = qn_from_json(require(j, "model"));
        if (model.classes != 1) throw ModelError("terminal model needs a single-class network");
        if (tm.m < 1) throw ModelError("M must be at least 1");
        for (const auto& s : mva_single(model, tm.m)) tm.t.push_back(s.throughput[0]);
    }
    tm.validate();
    return tm;
}

json to_json(const TerminalModel& tm) { return {{"m", tm.m}, {"z", tm.z}, {"t", tm.t}}; }

std::vector<std::string> validate_document(const json& j) {
    std::vector<std::string> out;
    if (!j.is_object()) return {"document is not a JSON object"};
    if (j.contains("entries")) {
        collect(out, [&] { require_irreducible(ctmc_from_json(j)); });
    } else if (j.contains("freqs")) {
        collect(out, [&] {
            const auto d = lock_from_json(j).diagnostics();
            out.insert(out.end(), d.begin(), d.end());
        });
    } else if (j.contains("tasks")) {
        const auto& tasks = j.at("tasks");
        const bool hybrid = tasks.is_array() && !tasks.empty() && tasks[0].is_object() && tasks[0].contains("cycles");
        collect(out, [&] {
            if (hybrid) {
                const auto ts = hybrid_tasks_from_json(j);
                const auto devices = stations_from_json(require(j, "devices"));
                for (const auto& t : ts) {
                    if (t.demands.size() != devices.size())
                        out.push_back("task " + std::to_string(t.id) + " demand count does not match the devices");
                    for (double x : t.demands)
                        if (!(x >= 0.0)) out.push_back("task " + std::to_string(t.id) + " has a negative demand");
                    if (!(t.cycles.value > 0.0)) out.push_back("task " + std::to_string(t.id) + " has no cycles");
                }
            } else {
                const auto d = task_system_from_json(j).diagnostics();
                out.insert(out.end(), d.begin(), d.end());
            }
        });
    } else if (j.contains("terminals") || j.contains("mpl")) {
        collect(out, [&] {
            const auto d = timesharing_from_json(j).diagnostics();
            out.insert(out.end(), d.begin(), d.end());
        });
    } else if (j.contains("m") && j.contains("z")) {
        collect(out, [&] {
            TerminalModel tm;
            tm.m = j.at("m").get<int>();
            tm.z = j.at("z").get<double>();
            if (j.contains("t")) {
                tm.t = j.at("t").get<std::vector<double>>();
                const auto d = tm.diagnostics();
                out.insert(out.end(), d.begin(), d.end());
            } else {
                terminal_from_json(j);
            }
        });
    } else if (j.contains("stations")) {
        collect(out, [&] {
            if (j.contains("routing")) {
                const auto p = j.at("routing").get<RoutingMatrix>();
                const auto d = row_sum_problems(p);
                if (!d.empty()) {
                    out.insert(out.end(), d.begin(), d.end());
                    return;
                }
                qn_from_json(j);
                return;
            }
            auto m = make_model(stations_from_json(j.at("stations")),
                                require(j, "demands").get<std::vector<std::vector<double>>>(),
                                value_or<std::vector<double>>(j, "think_times", {}));
            const auto d = m.diagnostics();
            out.insert(out.end(), d.begin(), d.end());
        });
    } else {
        out.emplace_back("unrecognized model document");
    }
    return out;
}

}  // namespace hiermodel::io
