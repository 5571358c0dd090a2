#include "hiermodel/hiersim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "hiermodel/ctmc.hpp"
#include "hiermodel/errors.hpp"
#include "hiermodel/rng.hpp"

namespace hiermodel {

namespace {
constexpr double never = std::numeric_limits<double>::infinity();
}

std::vector<std::string> TimesharingConfig::diagnostics() const {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < 2; ++j) {
        const std::string c = "class " + std::to_string(j + 1);
        if (terminals[j] < 0) out.push_back(c + ": terminal count is negative");
        if (mpl[j] < 1) out.push_back(c + ": MPL must be at least 1");
        if (!(think[j] > 0.0)) out.push_back(c + ": think time must be positive");
        if (!(cpu_demand[j] >= 0.0) || !(disk_demand[j] >= 0.0))
            out.push_back(c + ": demands must be non-negative");
        if (!(cpu_demand[j] + disk_demand[j] > 0.0)) out.push_back(c + ": no positive demand");
        if (active(j) && n_comp_target[j] < 1) out.push_back(c + ": completion target must be at least 1");
    }
    if (!active(0) && !active(1)) out.emplace_back("no class has terminals");
    if (disks < 0) out.emplace_back("disk count is negative");
    if (num_batches < 2) out.emplace_back("need at least two measured batches");
    if (warmup_batches < 0) out.emplace_back("warm-up batch count is negative");
    if (!(confidence > 0.0 && confidence < 1.0)) out.emplace_back("confidence level must lie in (0,1)");
    return out;
}

void TimesharingConfig::validate() const {
    const auto d = diagnostics();
    if (!d.empty()) throw ModelError(d.front());
}

TimesharingConfig preset_case(int case_number) {
    static constexpr std::array<std::array<int, 4>, 9> rows{{
        {20, 2, 4, 2}, {20, 2, 3, 1}, {20, 2, 1, 1},
        {30, 3, 7, 2}, {30, 3, 5, 1}, {30, 3, 2, 1},
        {40, 4, 14, 4}, {40, 4, 9, 3}, {40, 4, 5, 1},
    }};
    if (case_number < 1 || case_number > 9) throw ModelError("preset cases are numbered 1..9");
    const auto& r = rows[static_cast<std::size_t>(case_number - 1)];
    TimesharingConfig cfg;
    cfg.terminals = {r[0], r[1]};
    cfg.mpl = {r[2], r[3]};
    return cfg;
}

QnModel computer_model(const TimesharingConfig& cfg) {
    std::vector<Station> st;
    st.push_back({1, StationKind::queueing, "cpu"});
    for (int d = 0; d < cfg.disks; ++d) st.push_back({d + 2, StationKind::queueing, "disk" + std::to_string(d + 1)});
    std::vector<std::vector<double>> demands(2);
    for (std::size_t j = 0; j < 2; ++j) {
        demands[j].push_back(cfg.cpu_demand[j]);
        for (int d = 0; d < cfg.disks; ++d) demands[j].push_back(cfg.disk_demand[j]);
    }
    return make_model(std::move(st), std::move(demands));
}

ThroughputTable precompute_fesc(const TimesharingConfig& cfg) {
    cfg.validate();
    const std::array<int, 2> pop = cfg.mpl;
    return mva_multi(computer_model(cfg), pop);
}

namespace {

struct Job {
    double arrival;
    double depart;
};

struct BatchAccumulator {
    std::array<long, 2> completions{0, 0};
    std::array<double, 2> sum_resp{0.0, 0.0};
    std::array<double, 2> area{0.0, 0.0};
    double start = 0.0;
};

ClassReport finish_class(const std::vector<double>& resp, const std::vector<double>& thr,
                         const std::vector<double>& in_sys, long completions, double confidence) {
    ClassReport r;
    r.completions = completions;
    r.response = student_t_interval(resp, confidence);
    r.throughput = student_t_interval(thr, confidence);
    r.in_system = student_t_interval(in_sys, confidence);
    r.batch_response = resp;
    r.batch_throughput = thr;
    return r;
}

}  // namespace

SimReport simulate(const TimesharingConfig& cfg) {
    cfg.validate();
    const ThroughputTable table = precompute_fesc(cfg);

    std::array<CounterRng, 2> arrival_rng{CounterRng(cfg.seed, 1), CounterRng(cfg.seed, 2)};
    std::array<CounterRng, 2> service_rng{CounterRng(cfg.seed, 3), CounterRng(cfg.seed, 4)};

    std::array<int, 2> thinking = cfg.terminals;
    std::array<std::vector<Job>, 2> busy;
    std::array<std::deque<double>, 2> memq;
    std::array<double, 2> next_arrival{never, never};
    double clock = 0.0;

    const auto sample_arrival = [&](std::size_t j) {
        next_arrival[j] = thinking[j] > 0
                              ? clock + arrival_rng[j].exponential(static_cast<double>(thinking[j]) / cfg.think[j])
                              : never;
    };
    const auto class_rate = [&](std::size_t j) {
        const std::array<int, 2> k{static_cast<int>(busy[0].size()), static_cast<int>(busy[1].size())};
        const double t = table.throughput(k, j);
        if (!(t > 0.0)) throw ModelError("zero throughput with jobs present at (" + std::to_string(k[0]) + "," +
                                         std::to_string(k[1]) + ")");
        return t;
    };
    const auto resample_all = [&] {
        for (std::size_t j = 0; j < 2; ++j) {
            if (busy[j].empty()) continue;
            const double per_job = class_rate(j) / static_cast<double>(busy[j].size());
            for (auto& job : busy[j]) job.depart = clock + service_rng[j].exponential(per_job);
        }
    };
    const auto activate = [&](std::size_t j, double arrived) {
        busy[j].push_back({arrived, never});
        if (cfg.mode == ServiceMode::literal) busy[j].back().depart = clock + service_rng[j].exponential(class_rate(j));
    };

    for (std::size_t j = 0; j < 2; ++j) sample_arrival(j);

    SimReport report;
    report.seed = cfg.seed;
    std::array<std::vector<double>, 2> resp, thr, in_sys;
    std::array<long, 2> measured_completions{0, 0};
    BatchAccumulator batch;
    int batches_done = 0;
    const int total_batches = cfg.warmup_batches + cfg.num_batches;

    while (batches_done < total_batches) {
        // Most imminent event; ties resolve to the earliest class and slot.
        double next = never;
        int kind = -1;  // 0 arrival, 1 departure
        std::size_t cls = 0, slot = 0;
        for (std::size_t j = 0; j < 2; ++j) {
            if (next_arrival[j] < next) {
                next = next_arrival[j];
                kind = 0;
                cls = j;
            }
            for (std::size_t s = 0; s < busy[j].size(); ++s)
                if (busy[j][s].depart < next) {
                    next = busy[j][s].depart;
                    kind = 1;
                    cls = j;
                    slot = s;
                }
        }
        if (kind < 0) throw ModelError("simulation stalled: no pending events");

        for (std::size_t j = 0; j < 2; ++j)
            batch.area[j] += (next - clock) * static_cast<double>(busy[j].size() + memq[j].size());
        clock = next;
        ++report.events;

        if (kind == 0) {
            --thinking[cls];
            sample_arrival(cls);
            if (static_cast<int>(busy[cls].size()) < cfg.mpl[cls]) {
                activate(cls, clock);
                if (cfg.mode == ServiceMode::memoryless) resample_all();
            } else {
                memq[cls].push_back(clock);
            }
            continue;
        }

        const Job done = busy[cls][slot];
        busy[cls].erase(busy[cls].begin() + static_cast<std::ptrdiff_t>(slot));
        ++batch.completions[cls];
        batch.sum_resp[cls] += clock - done.arrival;
        ++thinking[cls];
        sample_arrival(cls);
        if (!memq[cls].empty()) {
            const double arrived = memq[cls].front();
            memq[cls].pop_front();
            activate(cls, arrived);
        }
        if (cfg.mode == ServiceMode::memoryless) resample_all();

        bool batch_full = true;
        for (std::size_t j = 0; j < 2; ++j)
            if (cfg.active(j) && batch.completions[j] < cfg.n_comp_target[j]) batch_full = false;
        if (!batch_full) continue;

        if (batches_done >= cfg.warmup_batches) {
            const double span = clock - batch.start;
            report.measured_time += span;
            for (std::size_t j = 0; j < 2; ++j) {
                if (!cfg.active(j)) continue;
                resp[j].push_back(batch.sum_resp[j] / static_cast<double>(batch.completions[j]));
                thr[j].push_back(static_cast<double>(batch.completions[j]) / span);
                in_sys[j].push_back(batch.area[j] / span);
                measured_completions[j] += batch.completions[j];
            }
        }
        ++batches_done;
        batch = BatchAccumulator{};
        batch.start = clock;
    }

    report.simulated_time = clock;
    for (std::size_t j = 0; j < 2; ++j)
        report.classes[j] = finish_class(resp[j], thr[j], in_sys[j], measured_completions[j], cfg.confidence);
    return report;
}

ExactTimesharing solve_exact(const TimesharingConfig& cfg) {
    cfg.validate();
    const ThroughputTable table = precompute_fesc(cfg);
    const auto l1 = static_cast<std::size_t>(cfg.terminals[0]);
    const auto l2 = static_cast<std::size_t>(cfg.terminals[1]);
    const auto idx = [&](std::size_t n1, std::size_t n2) { return n2 * (l1 + 1) + n1; };
    const std::size_t n_states = (l1 + 1) * (l2 + 1);

    const auto rates_at = [&](std::size_t n1, std::size_t n2) {
        const std::array<int, 2> k{std::min(static_cast<int>(n1), cfg.mpl[0]),
                                   std::min(static_cast<int>(n2), cfg.mpl[1])};
        return std::array<double, 2>{table.throughput(k, 0), table.throughput(k, 1)};
    };

    std::vector<Transition> tr;
    for (std::size_t n2 = 0; n2 <= l2; ++n2) {
        for (std::size_t n1 = 0; n1 <= l1; ++n1) {
            const std::size_t s = idx(n1, n2);
            const auto t = rates_at(n1, n2);
            if (n1 < l1) tr.push_back({s, idx(n1 + 1, n2), static_cast<double>(l1 - n1) / cfg.think[0]});
            if (n2 < l2) tr.push_back({s, idx(n1, n2 + 1), static_cast<double>(l2 - n2) / cfg.think[1]});
            if (n1 > 0) tr.push_back({s, idx(n1 - 1, n2), t[0]});
            if (n2 > 0) tr.push_back({s, idx(n1, n2 - 1), t[1]});
        }
    }
    const Ctmc chain(n_states, tr);
    const SteadyState ss = solve_direct(chain);

    ExactTimesharing out;
    out.states = n_states;
    for (std::size_t n2 = 0; n2 <= l2; ++n2) {
        for (std::size_t n1 = 0; n1 <= l1; ++n1) {
            const double p = ss.pi[idx(n1, n2)];
            const auto t = rates_at(n1, n2);
            out.n_bar[0] += p * static_cast<double>(n1);
            out.n_bar[1] += p * static_cast<double>(n2);
            out.throughput[0] += p * t[0];
            out.throughput[1] += p * t[1];
        }
    }
    for (std::size_t j = 0; j < 2; ++j)
        if (out.throughput[j] > 0.0) out.response[j] = out.n_bar[j] / out.throughput[j];
    return out;
}

ClassReport simulate_open(const OpenConfig& cfg) {
    if (!(cfg.lambda > 0.0)) throw ModelError("arrival rate must be positive");
    if (cfg.fesc.rates.empty()) throw ModelError("empty FESC characteristic");
    if (!(cfg.lambda < cfg.fesc.max_rate())) throw SaturationError("open FESC simulation is saturated");
    if (cfg.num_batches < 2 || cfg.n_comp_target < 1) throw ModelError("need at least two batches of one completion");

    CounterRng arrivals(cfg.seed, 1), service(cfg.seed, 2);
    const auto cap = static_cast<std::size_t>(cfg.fesc.m_max());
    std::vector<Job> busy;
    std::deque<double> memq;
    double clock = 0.0;
    double next_arrival = arrivals.exponential(cfg.lambda);

    const auto resample = [&] {
        if (busy.empty()) return;
        const double per_job = cfg.fesc.rate(busy.size()) / static_cast<double>(busy.size());
        for (auto& j : busy) j.depart = clock + service.exponential(per_job);
    };

    std::vector<double> resp, thr, in_sys;
    long completions = 0, measured = 0;
    double sum_resp = 0.0, area = 0.0, batch_start = 0.0;
    int done_batches = 0;
    while (done_batches < cfg.warmup_batches + cfg.num_batches) {
        double next = next_arrival;
        std::size_t slot = busy.size();
        for (std::size_t s = 0; s < busy.size(); ++s)
            if (busy[s].depart < next) {
                next = busy[s].depart;
                slot = s;
            }
        area += (next - clock) * static_cast<double>(busy.size() + memq.size());
        clock = next;
        if (slot == busy.size()) {
            next_arrival = clock + arrivals.exponential(cfg.lambda);
            if (busy.size() < cap) {
                busy.push_back({clock, never});
                resample();
            } else {
                memq.push_back(clock);
            }
            continue;
        }
        sum_resp += clock - busy[slot].arrival;
        ++completions;
        busy.erase(busy.begin() + static_cast<std::ptrdiff_t>(slot));
        if (!memq.empty()) {
            busy.push_back({memq.front(), never});
            memq.pop_front();
        }
        resample();
        if (completions < cfg.n_comp_target) continue;
        if (done_batches >= cfg.warmup_batches) {
            const double span = clock - batch_start;
            resp.push_back(sum_resp / static_cast<double>(completions));
            thr.push_back(static_cast<double>(completions) / span);
            in_sys.push_back(area / span);
            measured += completions;
        }
        ++done_batches;
        completions = 0;
        sum_resp = area = 0.0;
        batch_start = clock;
    }
    return finish_class(resp, thr, in_sys, measured, cfg.confidence);
}

ConfidenceInterval simulate_task_makespan(const TaskSystem& ts, const ThroughputProvider& tp,
                                          std::size_t replications, std::uint64_t seed, double confidence) {
    ts.validate();
    if (replications < 2) throw ModelError("need at least two replications");
    const std::size_t n = ts.tasks.size();
    std::vector<TaskSet> preds(n, 0);
    for (const auto& [a, b] : ts.precedence) preds[ts.index_of(b)] |= TaskSet{1} << ts.index_of(a);
    const TaskSet all = n == 64 ? ~TaskSet{0} : (TaskSet{1} << n) - 1;

    std::map<TaskSet, std::vector<double>> rate_cache;
    const auto rates = [&](TaskSet running) -> const std::vector<double>& {
        auto it = rate_cache.find(running);
        if (it == rate_cache.end()) it = rate_cache.emplace(running, tp(members(running))).first;
        return it->second;
    };

    CounterRng holding(seed, 1), branch(seed, 2);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t rep = 0; rep < replications; ++rep) {
        TaskSet done = 0, running = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (preds[i] == 0) running |= TaskSet{1} << i;
        double clock = 0.0;
        while (done != all) {
            const auto& t = rates(running);
            const auto active = members(running);
            double total = 0.0;
            for (double x : t) total += x;
            clock += holding.exponential(total);
            double u = branch.uniform() * total;
            std::size_t pick = active.size() - 1;
            for (std::size_t k = 0; k < active.size(); ++k) {
                if (u < t[k]) {
                    pick = k;
                    break;
                }
                u -= t[k];
            }
            const TaskSet bit = TaskSet{1} << active[pick];
            running &= ~bit;
            done |= bit;
            for (std::size_t i = 0; i < n; ++i) {
                const TaskSet b = TaskSet{1} << i;
                if (!((done | running) & b) && (preds[i] & done) == preds[i]) running |= b;
            }
        }
        sum += clock;
        sum_sq += clock * clock;
    }
    return normal_interval(sum, sum_sq, replications, confidence);
}

}  // namespace hiermodel
