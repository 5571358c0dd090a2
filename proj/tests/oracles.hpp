#pragma once

// Independent reference solutions used by the unit and acceptance tests.
// None of them goes through the MVA recursion or the leveled task sweep.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <vector>

namespace oracle {

/// Closed multi-class network with processor-sharing queueing stations and
/// infinite-server delay stations. Jobs leave every station for a uniformly
/// chosen station, so every station has visit ratio 1 and the service time
/// equals the demand. Returns the class throughputs from the full CTMC.
inline std::vector<double> product_form_throughputs(const std::vector<std::vector<double>>& demand,
                                                    const std::vector<bool>& is_delay,
                                                    const std::vector<int>& population) {
    const std::size_t n_cls = demand.size();
    const std::size_t n_st = is_delay.size();
    // Every way to spread each class over the stations, then their product.
    const auto compositions = [&](int k) {
        std::vector<std::vector<int>> out;
        std::vector<int> c(n_st, 0);
        std::function<void(std::size_t, int)> rec = [&](std::size_t st, int left) {
            if (st + 1 == n_st) {
                c[st] = left;
                out.push_back(c);
                return;
            }
            for (int x = 0; x <= left; ++x) {
                c[st] = x;
                rec(st + 1, left - x);
            }
        };
        rec(0, k);
        return out;
    };
    std::vector<std::vector<int>> states{{}};  // flattened [class][station]
    for (std::size_t j = 0; j < n_cls; ++j) {
        std::vector<std::vector<int>> next;
        for (const auto& s : states)
            for (const auto& c : compositions(population[j])) {
                auto t = s;
                t.insert(t.end(), c.begin(), c.end());
                next.push_back(std::move(t));
            }
        states = std::move(next);
    }
    std::map<std::vector<int>, std::size_t> index;
    for (std::size_t s = 0; s < states.size(); ++s) index[states[s]] = s;

    const std::size_t n = states.size();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const auto completion_rate = [&](const std::vector<int>& s, std::size_t j, std::size_t st) {
        const int here = s[j * n_st + st];
        if (here == 0) return 0.0;
        if (is_delay[st]) return here / demand[j][st];
        int total = 0;
        for (std::size_t c = 0; c < n_cls; ++c) total += s[c * n_st + st];
        return static_cast<double>(here) / total / demand[j][st];
    };
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t j = 0; j < n_cls; ++j)
            for (std::size_t st = 0; st < n_st; ++st) {
                const double r = completion_rate(states[a], j, st);
                if (r == 0.0) continue;
                for (std::size_t to = 0; to < n_st; ++to) {
                    if (to == st) continue;  // self-routing leaves the state unchanged
                    auto t = states[a];
                    --t[j * n_st + st];
                    ++t[j * n_st + to];
                    const auto b = index.at(t);
                    q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += r / static_cast<double>(n_st);
                    q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) -= r / static_cast<double>(n_st);
                }
            }
    }
    Eigen::MatrixXd a = q.transpose();
    a.row(static_cast<Eigen::Index>(n - 1)).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    rhs(static_cast<Eigen::Index>(n - 1)) = 1.0;
    const Eigen::VectorXd pi = a.fullPivLu().solve(rhs);

    // Throughput at station 0 counts every completion there, self-routing included.
    std::vector<double> x(n_cls, 0.0);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t j = 0; j < n_cls; ++j) x[j] += pi(static_cast<Eigen::Index>(s)) * completion_rate(states[s], j, 0);
    return x;
}

/// Mean time to absorption of the task-execution chain, built directly over
/// (completed, running) pairs. preds[i] is the predecessor bitmask of task i.
/// rates(running) returns the completion rate of each running task, ascending.
inline double dag_makespan(const std::vector<unsigned>& preds,
                           const std::function<std::vector<double>(const std::vector<std::size_t>&)>& rates) {
    const std::size_t n = preds.size();
    const unsigned all = (1u << n) - 1;
    const auto ready = [&](unsigned done, unsigned running) {
        unsigned r = running;
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned b = 1u << i;
            if (!(done & b) && !(running & b) && (preds[i] & done) == preds[i]) r |= b;
        }
        return r;
    };
    std::map<std::pair<unsigned, unsigned>, std::size_t> id;
    std::vector<std::pair<unsigned, unsigned>> list;
    std::vector<std::pair<unsigned, unsigned>> stack{{0u, ready(0u, 0u)}};
    while (!stack.empty()) {
        const auto s = stack.back();
        stack.pop_back();
        if (s.first == all || id.count(s)) continue;
        id[s] = list.size();
        list.push_back(s);
        for (std::size_t i = 0; i < n; ++i)
            if (s.second & (1u << i)) {
                const unsigned done = s.first | (1u << i);
                stack.push_back({done, ready(done, s.second & ~(1u << i))});
            }
    }
    const auto m = static_cast<Eigen::Index>(list.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t k = 0; k < list.size(); ++k) {
        const auto [done, running] = list[k];
        std::vector<std::size_t> act;
        for (std::size_t i = 0; i < n; ++i)
            if (running & (1u << i)) act.push_back(i);
        const auto r = rates(act);
        double out = 0.0;
        for (std::size_t t = 0; t < act.size(); ++t) {
            out += r[t];
            const unsigned nd = done | (1u << act[t]);
            if (nd == all) continue;
            const auto nxt = std::make_pair(nd, ready(nd, running & ~(1u << act[t])));
            a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(id.at(nxt))) -= r[t];
        }
        a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) += out;
    }
    const Eigen::VectorXd t = a.fullPivLu().solve(Eigen::VectorXd::Ones(m));
    return t(static_cast<Eigen::Index>(id.at({0u, ready(0u, 0u)})));
}

/// Machine repairman with L terminals, think time Z and a center whose
/// completion rate with n jobs present is rate(n). Returns mean response time.
inline double machine_repairman_response(int terminals, double think, const std::function<double(int)>& rate) {
    std::vector<double> p(static_cast<std::size_t>(terminals) + 1);
    p[0] = 1.0;
    for (int k = 1; k <= terminals; ++k)
        p[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k - 1)] * (terminals - k + 1) / think / rate(k);
    double sum = 0.0, n_bar = 0.0, x = 0.0;
    for (int k = 0; k <= terminals; ++k) sum += p[static_cast<std::size_t>(k)];
    for (int k = 1; k <= terminals; ++k) {
        n_bar += k * p[static_cast<std::size_t>(k)] / sum;
        x += rate(k) * p[static_cast<std::size_t>(k)] / sum;
    }
    return n_bar / x;
}

}  // namespace oracle
