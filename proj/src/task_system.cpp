#include "hiermodel/task_system.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hiermodel/errors.hpp"
#include "hiermodel/stats.hpp"

namespace hiermodel {

std::size_t TaskSystem::devices() const {
    if (!stations.empty()) return stations.size();
    return tasks.empty() ? 0 : tasks.front().demands.size();
}

std::vector<Station> TaskSystem::device_stations() const {
    return stations.empty() ? queueing_stations(devices()) : stations;
}

std::size_t TaskSystem::index_of(int id) const {
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (tasks[i].id == id) return i;
    throw ModelError("unknown task id " + std::to_string(id));
}

namespace {

// Returns a cycle as a list of task ids, or empty when the graph is acyclic.
std::vector<int> find_cycle(const TaskSystem& ts) {
    const std::size_t n = ts.tasks.size();
    std::vector<std::vector<std::size_t>> succ(n);
    for (const auto& [a, b] : ts.precedence) succ[ts.index_of(a)].push_back(ts.index_of(b));
    std::vector<int> color(n, 0);  // 0 new, 1 on path, 2 done
    std::vector<std::size_t> parent(n, n);
    for (std::size_t root = 0; root < n; ++root) {
        if (color[root]) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        color[root] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < succ[v].size()) {
                const std::size_t w = succ[v][next++];
                if (color[w] == 1) {
                    std::vector<int> cycle{ts.tasks[w].id};
                    for (std::size_t u = v; u != w; u = parent[u]) cycle.push_back(ts.tasks[u].id);
                    cycle.push_back(ts.tasks[w].id);
                    std::reverse(cycle.begin() + 1, cycle.end() - 1);
                    return cycle;
                }
                if (color[w] == 0) {
                    color[w] = 1;
                    parent[w] = v;
                    stack.emplace_back(w, 0);
                }
                continue;
            }
            color[v] = 2;
            stack.pop_back();
        }
    }
    return {};
}

}  // namespace

std::vector<std::string> TaskSystem::diagnostics() const {
    std::vector<std::string> out;
    if (tasks.empty()) out.emplace_back("task system has no tasks");
    if (tasks.size() > max_tasks)
        out.push_back("task system has " + std::to_string(tasks.size()) + " tasks, limit is " +
                      std::to_string(max_tasks));
    std::set<int> ids;
    const std::size_t n_dev = devices();
    if (n_dev == 0) out.emplace_back("task system has no devices");
    for (const auto& t : tasks) {
        if (!ids.insert(t.id).second) out.push_back("duplicate task id " + std::to_string(t.id));
        if (t.demands.size() != n_dev) {
            out.push_back("task " + std::to_string(t.id) + " has " + std::to_string(t.demands.size()) +
                          " demands for " + std::to_string(n_dev) + " devices");
            continue;
        }
        bool positive = false;
        for (double x : t.demands) {
            if (!(x >= 0.0) || !std::isfinite(x))
                out.push_back("task " + std::to_string(t.id) + " has a negative or non-finite demand");
            positive = positive || x > 0.0;
        }
        if (!positive) out.push_back("task " + std::to_string(t.id) + " has no positive demand");
    }
    bool edges_ok = true;
    for (const auto& [a, b] : precedence) {
        if (!ids.count(a) || !ids.count(b)) {
            out.push_back("precedence (" + std::to_string(a) + "," + std::to_string(b) +
                          ") names an unknown task");
            edges_ok = false;
        } else if (a == b) {
            out.push_back("task " + std::to_string(a) + " precedes itself");
            edges_ok = false;
        }
    }
    if (edges_ok && ids.size() == tasks.size()) {
        const auto cycle = find_cycle(*this);
        if (!cycle.empty()) {
            std::string w;
            for (std::size_t i = 0; i < cycle.size(); ++i) w += (i ? " -> " : "") + std::to_string(cycle[i]);
            out.push_back("precedence has a cycle: " + w);
        }
    }
    return out;
}

void TaskSystem::validate() const {
    const auto d = diagnostics();
    if (!d.empty()) throw ModelError(d.front());
}

std::vector<std::size_t> members(TaskSet s) {
    std::vector<std::size_t> m;
    m.reserve(static_cast<std::size_t>(std::popcount(s)));
    while (s) {
        m.push_back(static_cast<std::size_t>(std::countr_zero(s)));
        s &= s - 1;
    }
    return m;
}

std::string format_taskset(const TaskSystem& ts, TaskSet s) {
    std::string out = "{";
    bool first = true;
    for (auto i : members(s)) {
        out += (first ? "" : ",") + std::to_string(ts.tasks[i].id);
        first = false;
    }
    return out + "}";
}

ThroughputProvider mva_throughputs(const TaskSystem& ts) {
    const auto stations = ts.device_stations();
    std::vector<std::vector<double>> demands;
    demands.reserve(ts.tasks.size());
    for (const auto& t : ts.tasks) demands.push_back(t.demands);
    return [stations, demands](std::span<const std::size_t> active) {
        std::vector<std::vector<double>> rows;
        rows.reserve(active.size());
        for (auto i : active) rows.push_back(demands[i]);
        const auto model = make_model(stations, std::move(rows));
        const std::vector<int> pop(active.size(), 1);
        return mva_solve(model, pop).throughput;
    };
}

namespace {

struct Graph {
    std::vector<TaskSet> preds;  // predecessor mask per task
    TaskSet all = 0;
    TaskSet sources = 0;
};

Graph make_graph(const TaskSystem& ts) {
    Graph g;
    g.preds.assign(ts.tasks.size(), 0);
    for (const auto& [a, b] : ts.precedence) g.preds[ts.index_of(b)] |= TaskSet{1} << ts.index_of(a);
    for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
        g.all |= TaskSet{1} << i;
        if (g.preds[i] == 0) g.sources |= TaskSet{1} << i;
    }
    return g;
}

// Tasks that become eligible once `completed` is done, excluding running and finished ones.
TaskSet newly_ready(const Graph& g, TaskSet completed, TaskSet running) {
    TaskSet ready = 0;
    for (std::size_t i = 0; i < g.preds.size(); ++i) {
        const TaskSet bit = TaskSet{1} << i;
        if ((completed | running) & bit) continue;
        if ((g.preds[i] & completed) == g.preds[i]) ready |= bit;
    }
    return ready;
}

// Accumulators for a state at the level being built.
struct Pending {
    TaskSet completed = 0;
    double path_prob = 0.0;
    double weighted_delay = 0.0;  // sum p(S) b_R(S) D(S)
    double inflow = 0.0;          // sum T(S) b_R(S) P(S)
};

struct Sweep {
    const TaskSystem& ts;
    const ThroughputProvider& tp;
    SweepOptions opts;
    Graph g;

    std::vector<double> init, comp;
    double norm = 0.0;
    std::vector<double> running_mass;  // sum of unnormalized P(S) over states running task i
    std::vector<double> device_busy;
    std::vector<std::pair<TaskSet, double>> probs;  // unnormalized
    std::vector<std::size_t> level_sizes;
    double makespan = 0.0;
    double final_path_prob = 0.0;

    Sweep(const TaskSystem& t, const ThroughputProvider& p, const SweepOptions& o)
        : ts(t), tp(p), opts(o), g(make_graph(t)),
          init(t.tasks.size(), 0.0), comp(t.tasks.size(), 0.0),
          running_mass(t.tasks.size(), 0.0), device_busy(t.devices(), 0.0) {}

    // Evaluates one state and pushes its contributions into `next`.
    ExecState evaluate(TaskSet tasks, const Pending& in, int level, std::map<TaskSet, Pending>& next) {
        ExecState s;
        s.tasks = tasks;
        s.completed = in.completed;
        s.level = level;
        s.path_prob = in.path_prob;

        const bool start = level == 0;
        const bool final = tasks == 0 && !start;
        double flow = 0.0;  // T(S) P(S), the rate of passage through S
        if (start) {
            flow = 1.0;
        } else if (final) {
            s.delay = in.weighted_delay / (opts.rule == DelayRule::conditional ? in.path_prob : 1.0);
            makespan = in.weighted_delay;
            final_path_prob = in.path_prob;
            return s;
        } else {
            const auto active = members(tasks);
            if (active.size() > opts.max_mpl)
                throw ModelError("taskset " + format_taskset(ts, tasks) + " exceeds the MPL cap of " +
                                 std::to_string(opts.max_mpl));
            s.throughputs = tp(active);
            if (s.throughputs.size() != active.size())
                throw ModelError("throughput provider returned the wrong number of rates");
            double total = 0.0;
            for (std::size_t k = 0; k < active.size(); ++k) {
                if (!(s.throughputs[k] > 0.0) || !std::isfinite(s.throughputs[k]))
                    throw ModelError("non-positive throughput for task " +
                                     std::to_string(ts.tasks[active[k]].id) + " in " +
                                     format_taskset(ts, tasks));
                total += s.throughputs[k];
            }
            s.holding = 1.0 / total;
            const double prior = opts.rule == DelayRule::conditional ? in.weighted_delay / in.path_prob
                                                                     : in.weighted_delay;
            s.delay = s.holding + prior;
            s.prob = s.holding * in.inflow;
            flow = in.inflow;

            norm += s.prob;
            probs.emplace_back(tasks, s.prob);
            for (std::size_t k = 0; k < active.size(); ++k) {
                running_mass[active[k]] += s.prob;
                const auto& x = ts.tasks[active[k]].demands;
                for (std::size_t n = 0; n < x.size(); ++n) device_busy[n] += s.prob * s.throughputs[k] * x[n];
            }
        }

        const auto branch = [&](TaskSet target, TaskSet completed, double b, TaskSet activated,
                                std::size_t finished, bool has_finished) {
            const double w = s.path_prob * b;
            auto& r = next[target];
            r.completed = completed;
            r.path_prob += w;
            r.weighted_delay += w * s.delay;
            r.inflow += flow * b;
            for (auto i : members(activated)) init[i] += w * s.delay;
            if (has_finished) comp[finished] += w * s.delay;
        };

        if (start) {
            branch(g.sources, 0, 1.0, g.sources, 0, false);
        } else {
            const auto active = members(tasks);
            for (std::size_t k = 0; k < active.size(); ++k) {
                const std::size_t i = active[k];
                const TaskSet done = s.completed | (TaskSet{1} << i);
                const TaskSet still = tasks & ~(TaskSet{1} << i);
                const TaskSet ready = newly_ready(g, done, still);
                branch(still | ready, done, s.throughputs[k] * s.holding, ready, i, true);
            }
        }
        return s;
    }

    template <class OnLevel>
    void run(OnLevel&& on_level) {
        std::map<TaskSet, Pending> current;
        current[0] = Pending{0, 1.0, 0.0, 0.0};
        const int last = static_cast<int>(ts.tasks.size()) + 1;
        for (int level = 0; level <= last; ++level) {
            if (current.empty()) throw ModelError("level " + std::to_string(level) + " is empty");
            std::map<TaskSet, Pending> next;
            std::vector<ExecState> states;
            states.reserve(current.size());
            for (const auto& [tasks, pending] : current) {
                // Membership at a level is implied by the completed count.
                if (level > 0 && std::popcount(pending.completed) != level - 1)
                    throw ModelError("internal: inconsistent level for " + format_taskset(ts, tasks));
                states.push_back(evaluate(tasks, pending, level, next));
            }
            level_sizes.push_back(states.size());
            on_level(std::move(states));
            current = std::move(next);
        }
        if (!current.empty()) throw ModelError("internal: states beyond the final level");
    }
};

}  // namespace

std::vector<std::vector<ExecState>> build_levels(const TaskSystem& ts, const ThroughputProvider& tp,
                                                 const SweepOptions& opts) {
    ts.validate();
    Sweep sweep(ts, tp, opts);
    std::vector<std::vector<ExecState>> levels;
    sweep.run([&](std::vector<ExecState>&& states) { levels.push_back(std::move(states)); });
    for (auto& level : levels)
        for (auto& s : level) s.prob /= sweep.norm;
    return levels;
}

TaskReport analyze(const TaskSystem& ts, const ThroughputProvider& tp, const SweepOptions& opts) {
    ts.validate();
    Sweep sweep(ts, tp, opts);
    sweep.run([](std::vector<ExecState>&&) {});

    TaskReport r;
    r.makespan = sweep.makespan;
    r.final_path_prob = sweep.final_path_prob;
    r.init = sweep.init;
    r.comp = sweep.comp;
    r.exec.resize(ts.tasks.size());
    r.exec_alt.resize(ts.tasks.size());
    for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
        r.exec[i] = r.comp[i] - r.init[i];
        r.exec_alt[i] = r.makespan * sweep.running_mass[i] / sweep.norm;
    }
    r.state_probs = std::move(sweep.probs);
    for (auto& [s, p] : r.state_probs) p /= sweep.norm;
    r.device_util = sweep.device_busy;
    for (double& u : r.device_util) u /= sweep.norm;
    r.level_sizes = sweep.level_sizes;
    return r;
}

std::string format_report(const TaskSystem& ts, const TaskReport& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "makespan " << r.makespan << "\n\n";
    os << "task        init        comp        exec\n";
    for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
        os.width(4);
        os << ts.tasks[i].id;
        for (double v : {r.init[i], r.comp[i], r.exec[i]}) {
            os << "  ";
            os.width(10);
            os << v;
        }
        os << "\n";
    }
    os << "\ntaskset             P(S)\n";
    for (const auto& [s, p] : r.state_probs) {
        std::string label = format_taskset(ts, s);
        label.resize(std::max<std::size_t>(label.size(), 16), ' ');
        os << label << "  " << p << "\n";
    }
    os << "\ndevice  utilization\n";
    for (std::size_t d = 0; d < r.device_util.size(); ++d) {
        os.width(6);
        os << d + 1 << "  " << r.device_util[d] << "\n";
    }
    return os.str();
}

std::string to_dot(const TaskSystem& ts, const std::vector<std::vector<ExecState>>& levels) {
    const auto name = [&](const ExecState& s) {
        if (s.is_start()) return std::string("start");
        if (s.is_final()) return std::string("end");
        return format_taskset(ts, s.tasks);
    };
    const Graph g = make_graph(ts);
    std::ostringstream out;
    out << "digraph levels {\n  rankdir=TB;\n";
    for (const auto& level : levels) {
        out << "  { rank=same;";
        for (const auto& s : level) out << " \"" << name(s) << "\";";
        out << " }\n";
    }
    for (const auto& level : levels) {
        for (const auto& s : level) {
            if (s.is_final()) continue;
            if (s.is_start()) {
                out << "  \"start\" -> \"" << format_taskset(ts, g.sources) << "\" [label=\"1\"];\n";
                continue;
            }
            const auto active = members(s.tasks);
            for (std::size_t k = 0; k < active.size(); ++k) {
                const TaskSet done = s.completed | (TaskSet{1} << active[k]);
                const TaskSet still = s.tasks & ~(TaskSet{1} << active[k]);
                const TaskSet target = still | newly_ready(g, done, still);
                out << "  \"" << name(s) << "\" -> \"" << (target ? format_taskset(ts, target) : "end")
                    << "\" [label=\"" << s.throughputs[k] * s.holding << "\"];\n";
            }
        }
    }
    out << "}\n";
    return out.str();
}

NormalMoments max_normal_moments(NormalMoments x, int n) {
    if (n < 1) throw ModelError("max of n variables needs n >= 1");
    if (!(x.sd >= 0.0)) throw ModelError("standard deviation must be non-negative");
    const double g1 = expected_max_std_normal(n);
    const double g2 = second_moment_max_std_normal(n);
    return {x.mean + x.sd * g1, x.sd * std::sqrt(std::max(0.0, g2 - g1 * g1))};
}

double max_normal(std::span<const NormalMoments> makespans, int n) {
    if (n < 1) throw ModelError("max of n variables needs n >= 1");
    if (makespans.empty()) throw ModelError("no component makespans given");
    double mean = 0.0, var = 0.0;
    for (const auto& m : makespans) {
        if (!(m.sd >= 0.0)) throw ModelError("standard deviation must be non-negative");
        mean += m.mean;
        var += m.sd * m.sd;
    }
    const double k = static_cast<double>(makespans.size());
    return max_normal_moments({mean / k, std::sqrt(var / k)}, n).mean;
}

double max_normal_two_step(NormalMoments x, int group_size, int groups) {
    return max_normal_moments(max_normal_moments(x, group_size), groups).mean;
}

}  // namespace hiermodel
