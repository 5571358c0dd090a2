#include "hiermodel/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hiermodel/errors.hpp"
#include "hiermodel/rng.hpp"

namespace hiermodel {

namespace {

constexpr double never = std::numeric_limits<double>::infinity();
constexpr double tie_tol = 1e-12;

void check_tasks(const std::vector<HybridTask>& tasks, const std::vector<Station>& devices) {
    if (tasks.empty()) throw ModelError("no tasks");
    if (devices.empty()) throw ModelError("no devices");
    for (const auto& t : tasks) {
        const std::string who = "task " + std::to_string(t.id);
        if (t.demands.size() != devices.size())
            throw ModelError(who + ": demand count does not match the device count");
        bool positive = false;
        for (double d : t.demands) {
            if (!std::isfinite(d) || d < 0.0) throw ModelError(who + ": demands must be non-negative");
            positive = positive || d > 0.0;
        }
        if (!positive) throw ModelError(who + ": no positive demand");
        if (!(t.cycles.value > 0.0) || !std::isfinite(t.cycles.value))
            throw ModelError(who + ": cycle count must be positive");
        if (!(t.arrival >= 0.0) || !std::isfinite(t.arrival)) throw ModelError(who + ": bad arrival time");
    }
}

/// Residence of every listed task with the given demand rows, one job each.
std::vector<double> residences(const std::vector<Station>& devices,
                               std::vector<std::vector<double>> rows) {
    const std::size_t n = rows.size();
    const auto sol = mva_solve(make_model(devices, std::move(rows)), std::vector<int>(n, 1));
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) r[k] = sol.response(k);
    return r;
}

double next_arrival_after(const std::vector<HybridTask>& tasks, const std::vector<bool>& arrived) {
    double t = never;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (!arrived[i]) t = std::min(t, tasks[i].arrival);
    return t;
}

/// Shared event loop. `durations` gives each active task's time to finish if
/// the mix stayed fixed; `advance` moves the remaining work on by x.
template <typename Durations, typename Advance>
HybridResult event_loop(const std::vector<HybridTask>& tasks, Durations durations, Advance advance) {
    const std::size_t n = tasks.size();
    HybridResult res;
    res.start.assign(n, 0.0);
    res.finish.assign(n, 0.0);
    std::vector<bool> arrived(n, false), done(n, false);
    double clock = 0.0;
    std::size_t finished = 0;

    const auto admit = [&] {
        for (std::size_t i = 0; i < n; ++i)
            if (!arrived[i] && tasks[i].arrival <= clock) {
                arrived[i] = true;
                res.start[i] = tasks[i].arrival;
            }
    };
    clock = std::min_element(tasks.begin(), tasks.end(), [](const auto& a, const auto& b) {
                return a.arrival < b.arrival;
            })->arrival;
    admit();

    while (finished < n) {
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < n; ++i)
            if (arrived[i] && !done[i]) active.push_back(i);
        const double arrival = next_arrival_after(tasks, arrived);
        if (active.empty()) {
            clock = arrival;
            admit();
            continue;
        }
        const std::vector<double> need = durations(active);
        double x = arrival - clock;
        for (double d : need) {
            if (!(d > 0.0) || !std::isfinite(d)) throw ModelError("nonpositive time to completion in hybrid loop");
            x = std::min(x, d);
        }
        std::vector<bool> finishing(active.size());
        for (std::size_t k = 0; k < active.size(); ++k)
            finishing[k] = need[k] - x <= tie_tol * need[k];
        advance(active, need, x, finishing);
        clock += x;
        for (std::size_t k = 0; k < active.size(); ++k)
            if (finishing[k]) {
                done[active[k]] = true;
                res.finish[active[k]] = clock;
                ++finished;
            }
        admit();
        res.epochs.push_back({clock, active, {}});
    }
    res.makespan = *std::max_element(res.finish.begin(), res.finish.end());
    return res;
}

HybridResult cycles_with(const std::vector<HybridTask>& tasks, const std::vector<Station>& devices,
                         std::vector<double> cr) {
    std::vector<std::vector<std::vector<double>>> snaps;
    auto res = event_loop(
        tasks,
        [&](const std::vector<std::size_t>& active) {
            std::vector<std::vector<double>> rows;
            for (auto i : active) rows.push_back(tasks[i].demands);
            auto ct = residences(devices, std::move(rows));
            for (std::size_t k = 0; k < active.size(); ++k) ct[k] *= cr[active[k]];
            return ct;
        },
        [&](const std::vector<std::size_t>& active, const std::vector<double>& need, double x,
            const std::vector<bool>& finishing) {
            for (std::size_t k = 0; k < active.size(); ++k) {
                const std::size_t i = active[k];
                const double ct = need[k] / cr[i];
                cr[i] = finishing[k] ? 0.0 : cr[i] - x / ct;
            }
            std::vector<std::vector<double>> snap;
            for (double c : cr) snap.push_back({c});
            snaps.push_back(std::move(snap));
        });
    for (std::size_t e = 0; e < res.epochs.size(); ++e) res.epochs[e].remaining = std::move(snaps[e]);
    return res;
}

std::vector<double> draw_cycles(const std::vector<HybridTask>& tasks, CounterRng& rng) {
    // Continuous-stage limit of a geometric count: the remaining work of a task
    // is exponential, so completions are memoryless like the task-system chain.
    std::vector<double> cr(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i)
        cr[i] = tasks[i].cycles.kind == CycleKind::fixed ? tasks[i].cycles.value
                                                          : rng.exponential(1.0 / tasks[i].cycles.value);
    return cr;
}

}  // namespace

HybridResult run_cycles(const std::vector<HybridTask>& tasks, const std::vector<Station>& devices,
                        std::uint64_t seed) {
    check_tasks(tasks, devices);
    CounterRng rng(seed, 0);
    return cycles_with(tasks, devices, draw_cycles(tasks, rng));
}

HybridResult run_residual(const std::vector<HybridTask>& tasks, const std::vector<Station>& devices) {
    check_tasks(tasks, devices);
    std::vector<std::vector<double>> residual;
    for (const auto& t : tasks) {
        if (t.cycles.kind != CycleKind::fixed) throw ModelError("residual mode needs fixed cycle counts");
        auto d = t.demands;
        for (double& x : d) x *= t.cycles.value;
        residual.push_back(std::move(d));
    }
    std::vector<std::vector<std::vector<double>>> snaps;
    auto res = event_loop(
        tasks,
        [&](const std::vector<std::size_t>& active) {
            std::vector<std::vector<double>> rows;
            for (auto i : active) rows.push_back(residual[i]);
            return residences(devices, std::move(rows));
        },
        [&](const std::vector<std::size_t>& active, const std::vector<double>& r, double t,
            const std::vector<bool>& finishing) {
            for (std::size_t k = 0; k < active.size(); ++k) {
                if (t > r[k] * (1.0 + tie_tol))
                    throw ModelError("epoch outlasts the residence of a surviving task");
                const double keep = finishing[k] ? 0.0 : 1.0 - t / r[k];
                for (double& x : residual[active[k]]) x *= keep;
            }
            snaps.push_back(residual);
        });
    for (std::size_t e = 0; e < res.epochs.size(); ++e) res.epochs[e].remaining = std::move(snaps[e]);
    return res;
}

ThroughputProvider cycle_throughputs(const std::vector<HybridTask>& tasks,
                                     const std::vector<Station>& devices) {
    check_tasks(tasks, devices);
    return [tasks, devices](std::span<const std::size_t> active) {
        std::vector<std::vector<double>> rows;
        for (auto i : active) rows.push_back(tasks[i].demands);
        auto ct = residences(devices, std::move(rows));
        std::vector<double> rate(active.size());
        for (std::size_t k = 0; k < active.size(); ++k) rate[k] = 1.0 / (tasks[active[k]].cycles.value * ct[k]);
        return rate;
    };
}

double geometric_completion(const std::vector<HybridTask>& tasks, const std::vector<Station>& devices) {
    check_tasks(tasks, devices);
    for (const auto& t : tasks)
        if (t.arrival != 0.0) throw ModelError("geometric completion assumes every task starts at time 0");
    const auto rates = cycle_throughputs(tasks, devices);
    if (tasks.size() == 1) return 1.0 / rates(std::vector<std::size_t>{0})[0];
    if (tasks.size() == 2) {
        const auto t12 = rates(std::vector<std::size_t>{0, 1});
        const double h12 = 1.0 / (t12[0] + t12[1]);
        const double p1 = t12[0] * h12;
        const double p2 = t12[1] * h12;
        const double h1 = 1.0 / rates(std::vector<std::size_t>{0})[0];
        const double h2 = 1.0 / rates(std::vector<std::size_t>{1})[0];
        return h12 + p1 * h2 + p2 * h1;
    }
    TaskSystem ts;
    ts.stations = devices;
    for (const auto& t : tasks) ts.tasks.push_back({t.id, t.demands});
    return analyze(ts, rates).makespan;
}

ConfidenceInterval simulate_geometric(const std::vector<HybridTask>& tasks,
                                      const std::vector<Station>& devices, std::size_t replications,
                                      std::uint64_t seed, double confidence) {
    check_tasks(tasks, devices);
    if (replications < 2) throw ModelError("need at least two replications");
    CounterRng rng(seed, 0);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t r = 0; r < replications; ++r) {
        const double c = cycles_with(tasks, devices, draw_cycles(tasks, rng)).makespan;
        sum += c;
        sum_sq += c * c;
    }
    return normal_interval(sum, sum_sq, replications, confidence);
}

double min_uniform_cycles(int n, double x) {
    if (n < 1) throw ModelError("need at least one task");
    if (!(x > 0.0)) throw ModelError("upper bound must be positive");
    return x / (n + 1);
}

double phased_residence(const std::vector<std::vector<double>>& phases,
                        const std::vector<BackgroundClass>& background,
                        const std::vector<Station>& devices) {
    if (phases.empty()) throw ModelError("batch job has no phases");
    double total = 0.0;
    for (const auto& phase : phases) {
        std::vector<std::vector<double>> rows{phase};
        std::vector<int> pop{1};
        for (const auto& b : background) {
            if (b.population < 0) throw ModelError("background population is negative");
            rows.push_back(b.demands);
            pop.push_back(b.population);
        }
        total += mva_solve(make_model(devices, std::move(rows)), pop).response(0);
    }
    return total;
}

}  // namespace hiermodel
