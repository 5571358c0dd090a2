#include "hiermodel/txn_lock.hpp"

#include <cmath>
#include <numeric>

#include "hiermodel/errors.hpp"

namespace hiermodel {

std::vector<std::string> LockModel::diagnostics() const {
    std::vector<std::string> out;
    const std::size_t j = freqs.size();
    if (j < 2) out.emplace_back("lock model needs at least two classes");
    if (rates.size() != j)
        out.push_back("rates has " + std::to_string(rates.size()) + " entries for " + std::to_string(j) +
                      " classes");
    double sum = 0.0;
    for (double f : freqs) {
        if (!(f >= 0.0 && f <= 1.0)) out.emplace_back("class frequency outside [0,1]");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-12) out.push_back("class frequencies sum to " + std::to_string(sum) + ", not 1");
    if (pair[0] >= j || pair[1] >= j || pair[0] == pair[1])
        out.emplace_back("compatible pair must name two distinct classes");
    for (double t : rates)
        if (!(t > 0.0) || !std::isfinite(t)) out.emplace_back("single-class rates must be positive");
    for (double t : joint_rates)
        if (!(t > 0.0) || !std::isfinite(t)) out.emplace_back("joint-state rates must be positive");
    if (lambda < 0.0) out.emplace_back("arrival rate must be non-negative");
    return out;
}

void LockModel::validate() const {
    const auto d = diagnostics();
    if (!d.empty()) throw ModelError(d.front());
}

namespace {

// Distribution of the blocked head-of-queue class while `comp` executes.
std::vector<double> head_distribution(const LockModel& m, const ExecComposition& comp) {
    std::vector<double> hd = m.freqs;
    if (comp.joint) return hd;
    const auto [a, b] = m.pair;
    std::size_t excluded = m.classes();
    if (comp.single == a) excluded = b;
    if (comp.single == b) excluded = a;
    if (excluded < m.classes()) {
        const double keep = 1.0 - m.freqs[excluded];
        for (auto& x : hd) x /= keep;
        hd[excluded] = 0.0;
    }
    return hd;
}

struct ExecEvent {
    double rate;
    ExecComposition target;
    std::array<int, 2> admitted;  // class indices, -1 when unused
};

// Completion events with an infinite backlog, self-transitions included.
std::vector<ExecEvent> exec_events(const LockModel& m, const ExecComposition& comp) {
    const auto [a, b] = m.pair;
    std::vector<ExecEvent> ev;
    const auto admit_head = [&](double rate, std::size_t h) {
        if (rate <= 0.0) return;
        if (h == a || h == b) {
            const std::size_t partner = h == a ? b : a;
            const double fp = m.freqs[partner];
            if (fp > 0.0)
                ev.push_back({rate * fp, {0, true}, {static_cast<int>(h), static_cast<int>(partner)}});
            if (fp < 1.0) ev.push_back({rate * (1.0 - fp), {h, false}, {static_cast<int>(h), -1}});
        } else {
            ev.push_back({rate, {h, false}, {static_cast<int>(h), -1}});
        }
    };
    if (!comp.joint) {
        const auto hd = head_distribution(m, comp);
        const double t = m.rates[comp.single];
        for (std::size_t h = 0; h < m.classes(); ++h) admit_head(t * hd[h], h);
        return ev;
    }
    for (int side = 0; side < 2; ++side) {
        const std::size_t done = m.pair[static_cast<std::size_t>(side)];
        const std::size_t left = m.pair[static_cast<std::size_t>(1 - side)];
        const double t = m.joint_rates[static_cast<std::size_t>(side)];
        const double f = m.freqs[done];
        if (f > 0.0) ev.push_back({t * f, {0, true}, {static_cast<int>(done), -1}});
        if (f < 1.0) ev.push_back({t * (1.0 - f), {left, false}, {-1, -1}});
    }
    return ev;
}

bool same(const ExecComposition& x, const ExecComposition& y) {
    return x.joint == y.joint && (x.joint || x.single == y.single);
}

std::vector<ExecComposition> live_states(const LockModel& m) {
    std::vector<ExecComposition> s;
    for (std::size_t j = 0; j < m.classes(); ++j)
        if (m.freqs[j] > 0.0) s.push_back({j, false});
    if (m.freqs[m.pair[0]] * m.freqs[m.pair[1]] > 0.0) s.push_back({0, true});
    return s;
}

std::size_t position(const std::vector<ExecComposition>& states, const ExecComposition& c) {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (same(states[i], c)) return i;
    throw ModelError("internal: execution state with zero frequency reached");
}

std::string label(const ExecComposition& c, const LockModel& m) {
    if (c.joint) return "S_" + std::to_string(m.pair[0] + 1) + "," + std::to_string(m.pair[1] + 1);
    return "S_" + std::to_string(c.single + 1);
}

// Executing txns plus the conditioned head of the queue, by class.
std::vector<double> class_count(const LockModel& m, const ExecComposition& c, bool with_head) {
    std::vector<double> n(m.classes(), 0.0);
    if (c.joint) {
        n[m.pair[0]] += 1.0;
        n[m.pair[1]] += 1.0;
        return n;
    }
    n[c.single] += 1.0;
    if (with_head) {
        const auto hd = head_distribution(m, c);
        for (std::size_t j = 0; j < n.size(); ++j) n[j] += hd[j];
    }
    return n;
}

}  // namespace

ExecStateSpace build_exec_matrix(const LockModel& m, MatrixVariant variant) {
    m.validate();
    const bool printed = variant == MatrixVariant::printed;
    if (printed && !(m.classes() == 5 && m.pair[0] == 0 && m.pair[1] == 1))
        throw ModelError("the printed matrix variant exists only for five classes with pair (1,2)");

    auto states = live_states(m);
    std::vector<Transition> tr;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < states.size(); ++i) {
        labels.push_back(label(states[i], m));
        for (const auto& e : exec_events(m, states[i])) {
            const std::size_t to = position(states, e.target);
            if (to == i) continue;
            double rate = e.rate;
            if (printed && !states[i].joint && states[i].single == 2 && e.target.joint)
                rate *= m.freqs[3] / m.freqs[1];  // this variant reads 2 f_1 f_4 T_3
            tr.push_back({i, to, rate});
        }
    }
    return ExecStateSpace{states, Ctmc(states.size(), tr, std::move(labels))};
}

LockAggregate aggregate_throughputs(const LockModel& m, const ExecStateSpace& space, const SteadyState& ss) {
    if (ss.pi.size() != space.states.size()) throw ModelError("steady state does not match the state space");
    const std::size_t nc = m.classes();
    LockAggregate agg;
    agg.state_probs = ss.pi;
    agg.throughput.assign(nc, 0.0);
    agg.n_bar.assign(nc, 0.0);
    agg.admission.assign(nc, 0.0);

    for (std::size_t i = 0; i < space.states.size(); ++i) {
        const auto& c = space.states[i];
        const double p = ss.pi[i];
        if (c.joint) {
            agg.throughput[m.pair[0]] += p * m.joint_rates[0];
            agg.throughput[m.pair[1]] += p * m.joint_rates[1];
        } else {
            agg.throughput[c.single] += p * m.rates[c.single];
        }
        const auto count = class_count(m, c, true);
        for (std::size_t j = 0; j < nc; ++j) agg.n_bar[j] += p * count[j];
        for (const auto& e : exec_events(m, c))
            for (int adm : e.admitted)
                if (adm >= 0) agg.admission[static_cast<std::size_t>(adm)] += p * e.rate;
    }
    agg.total = std::accumulate(agg.throughput.begin(), agg.throughput.end(), 0.0);

    double cycle = 0.0;
    for (std::size_t j = 0; j < nc; ++j) cycle += m.freqs[j] / m.rates[j];
    agg.single_throughput = 1.0 / cycle;
    agg.n_bar_single.resize(nc);
    for (std::size_t j = 0; j < nc; ++j) agg.n_bar_single[j] = m.freqs[j] / m.rates[j] / cycle;
    return agg;
}

LockResponse response_times(const LockModel& m, const LockAggregate& agg, double lambda) {
    const std::vector<double> curve{agg.single_throughput, agg.total};
    LockResponse r;
    r.birth_death = solve_birth_death(lambda, flatten(curve, 2));
    const auto& p = r.birth_death.p;
    const double p1 = p.size() > 1 ? p[1] : 0.0;
    const double at_least_two = 1.0 - p[0] - p1;
    const std::size_t nc = m.classes();
    r.n_bar.resize(nc);
    r.response.assign(nc, 0.0);
    for (std::size_t j = 0; j < nc; ++j) {
        r.n_bar[j] = p1 * agg.n_bar_single[j] + at_least_two * agg.n_bar[j] + m.freqs[j] * r.birth_death.n_memq;
        if (m.freqs[j] > 0.0) r.response[j] = r.n_bar[j] / (m.freqs[j] * lambda);
    }
    return r;
}

namespace {

struct TwoLevelChain {
    std::vector<ExecComposition> comps;
    std::size_t capacity;

    // index 0: empty; then for n = 1..capacity: singles, and joint for n >= 2
    std::size_t per_level() const { return comps.size(); }
    std::size_t size() const { return 1 + capacity * per_level(); }
    std::size_t index(std::size_t comp, std::size_t n) const { return 1 + (n - 1) * per_level() + comp; }
};

}  // namespace

TwoLevelSolution solve_two_level(const LockModel& m, double lambda, const TwoLevelOptions& opts) {
    m.validate();
    if (!(lambda > 0.0)) throw ModelError("arrival rate must be positive");
    const auto comps = live_states(m);
    const std::size_t nc = m.classes();
    const auto [a, b] = m.pair;

    std::size_t cap = opts.capacity ? opts.capacity : 32;
    for (;;) {
        TwoLevelChain ch{comps, cap};
        std::vector<Transition> tr;
        const auto find = [&](const ExecComposition& c) { return position(comps, c); };

        for (std::size_t j = 0; j < nc; ++j)
            if (m.freqs[j] > 0.0) tr.push_back({0, ch.index(find({j, false}), 1), lambda * m.freqs[j]});

        for (std::size_t ci = 0; ci < comps.size(); ++ci) {
            const auto& c = comps[ci];
            for (std::size_t n = 1; n <= cap; ++n) {
                if (c.joint && n < 2) continue;
                const std::size_t from = ch.index(ci, n);
                if (n < cap) {
                    for (std::size_t i = 0; i < nc; ++i) {
                        if (m.freqs[i] <= 0.0) continue;
                        const double rate = lambda * m.freqs[i];
                        const bool pairs = !c.joint && n == 1 &&
                                           ((c.single == a && i == b) || (c.single == b && i == a));
                        tr.push_back({from, pairs ? ch.index(find({0, true}), 2) : ch.index(ci, n + 1), rate});
                    }
                }
                if (!c.joint) {
                    const double t = m.rates[c.single];
                    if (n == 1) {
                        tr.push_back({from, 0, t});
                        continue;
                    }
                    const auto hd = head_distribution(m, c);
                    const std::size_t behind = n - 2;
                    for (std::size_t h = 0; h < nc; ++h) {
                        if (hd[h] <= 0.0) continue;
                        const double rate = t * hd[h];
                        const std::size_t single_to = ch.index(find({h, false}), n - 1);
                        if ((h == a || h == b) && behind >= 1) {
                            const double fp = m.freqs[h == a ? b : a];
                            if (fp > 0.0) tr.push_back({from, ch.index(find({0, true}), n - 1), rate * fp});
                            if (fp < 1.0) tr.push_back({from, single_to, rate * (1.0 - fp)});
                        } else {
                            tr.push_back({from, single_to, rate});
                        }
                    }
                } else {
                    for (int side = 0; side < 2; ++side) {
                        const std::size_t done = m.pair[static_cast<std::size_t>(side)];
                        const std::size_t left = m.pair[static_cast<std::size_t>(1 - side)];
                        const double t = m.joint_rates[static_cast<std::size_t>(side)];
                        const std::size_t single_to = ch.index(find({left, false}), n - 1);
                        if (n == 2) {
                            tr.push_back({from, single_to, t});
                            continue;
                        }
                        const double f = m.freqs[done];
                        if (f > 0.0) tr.push_back({from, ch.index(ci, n - 1), t * f});
                        if (f < 1.0) tr.push_back({from, single_to, t * (1.0 - f)});
                    }
                }
            }
        }

        // Joint slots at n = 1 are never entered; drop them so the chain is irreducible.
        std::vector<std::size_t> remap(ch.size(), static_cast<std::size_t>(-1));
        std::size_t live = 0;
        remap[0] = live++;
        for (std::size_t n = 1; n <= cap; ++n)
            for (std::size_t ci = 0; ci < comps.size(); ++ci)
                if (!(comps[ci].joint && n < 2)) remap[ch.index(ci, n)] = live++;
        for (auto& t : tr) {
            t.from = remap[t.from];
            t.to = remap[t.to];
        }
        const Ctmc chain(live, tr);

        IterativeOptions io;
        io.tol = opts.tol;
        io.max_iter = opts.max_iter;
        const SteadyState ss = opts.use_power_iteration ? power_iterate(chain, io) : gauss_seidel(chain, io);

        TwoLevelSolution sol;
        sol.capacity = cap;
        sol.states = live;
        sol.iterations = ss.iterations;
        sol.n_bar.assign(nc, 0.0);
        for (std::size_t n = 1; n <= cap; ++n) {
            for (std::size_t ci = 0; ci < comps.size(); ++ci) {
                const auto& c = comps[ci];
                if (c.joint && n < 2) continue;
                const double p = ss.pi[remap[ch.index(ci, n)]];
                if (n == cap) sol.blocking += p;
                // A single class carries a conditioned head; the joint state's
                // head and everything behind any head are unconditioned draws.
                const auto count = class_count(m, c, !c.joint && n >= 2);
                const double extra = n >= 2 ? static_cast<double>(n - 2) : 0.0;
                for (std::size_t j = 0; j < nc; ++j) sol.n_bar[j] += p * (count[j] + extra * m.freqs[j]);
            }
        }
        if (opts.capacity || sol.blocking < opts.blocking_target) {
            sol.response.assign(nc, 0.0);
            const double accepted = lambda * (1.0 - sol.blocking);
            for (std::size_t j = 0; j < nc; ++j)
                if (m.freqs[j] > 0.0) sol.response[j] = sol.n_bar[j] / (m.freqs[j] * accepted);
            return sol;
        }
        if (cap >= (std::size_t{1} << 16))
            throw ModelError("blocking probability stays above target at capacity " + std::to_string(cap));
        cap *= 2;
    }
}

}  // namespace hiermodel
