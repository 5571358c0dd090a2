#include "hiermodel/qn.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "hiermodel/errors.hpp"

namespace hiermodel {

namespace {

constexpr double row_sum_tolerance = 1e-9;

// Stations reachable from `from` following positive routing entries.
std::vector<bool> reachable(const RoutingMatrix& p, std::size_t from, bool reverse) {
    const std::size_t n = p.size();
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < n; ++j) {
            const double w = reverse ? p[j][i] : p[i][j];
            if (w > 0.0 && !seen[j]) {
                seen[j] = true;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

}  // namespace

std::vector<std::string> QnModel::diagnostics() const {
    std::vector<std::string> out;
    if (stations.empty()) out.emplace_back("model has no stations");
    for (std::size_t n = 0; n < stations.size(); ++n) {
        if (stations[n].id != static_cast<int>(n + 1))
            out.push_back("station ids must be contiguous from 1; station " + std::to_string(n) +
                          " has id " + std::to_string(stations[n].id));
    }
    if (classes < 1) out.emplace_back("model needs at least one class");
    if (demands.size() != classes)
        out.push_back("demands has " + std::to_string(demands.size()) + " rows for " +
                      std::to_string(classes) + " classes");
    for (std::size_t j = 0; j < demands.size(); ++j) {
        if (demands[j].size() != stations.size()) {
            out.push_back("class " + std::to_string(j + 1) + " has " +
                          std::to_string(demands[j].size()) + " demands for " +
                          std::to_string(stations.size()) + " stations");
            continue;
        }
        bool any_positive = false;
        for (std::size_t n = 0; n < demands[j].size(); ++n) {
            const double x = demands[j][n];
            if (!std::isfinite(x) || x < 0.0)
                out.push_back("class " + std::to_string(j + 1) + " demand at station " +
                              std::to_string(n + 1) + " is negative or not finite");
            any_positive = any_positive || x > 0.0;
        }
        if (!any_positive)
            out.push_back("class " + std::to_string(j + 1) + " has no positive demand");
    }
    if (!think_times.empty()) {
        if (think_times.size() != classes)
            out.push_back("think_times has " + std::to_string(think_times.size()) +
                          " entries for " + std::to_string(classes) + " classes");
        for (std::size_t j = 0; j < think_times.size(); ++j)
            if (!std::isfinite(think_times[j]) || think_times[j] < 0.0)
                out.push_back("class " + std::to_string(j + 1) +
                              " think time is negative or not finite");
    }
    return out;
}

void QnModel::validate() const {
    const auto d = diagnostics();
    if (!d.empty()) throw ModelError(d.front());
}

QnModel make_model(std::vector<Station> stations, std::vector<std::vector<double>> demands,
                   std::vector<double> think_times) {
    QnModel m;
    m.stations = std::move(stations);
    m.classes = demands.size();
    m.demands = std::move(demands);
    m.think_times = std::move(think_times);
    return m;
}

std::vector<Station> queueing_stations(std::size_t n) {
    std::vector<Station> s(n);
    for (std::size_t i = 0; i < n; ++i)
        s[i] = Station{static_cast<int>(i + 1), StationKind::queueing, "S" + std::to_string(i + 1)};
    return s;
}

double MvaSolution::response(std::size_t j) const {
    return std::accumulate(residence[j].begin(), residence[j].end(), 0.0);
}

std::vector<double> visits_from_routing(const RoutingMatrix& p, std::size_t reference) {
    const std::size_t n = p.size();
    if (n == 0) throw ModelError("routing matrix is empty");
    if (reference >= n) throw ModelError("reference station out of range");
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i].size() != n) throw ModelError("routing matrix is not square");
        double sum = 0.0;
        for (double w : p[i]) {
            if (!(w >= 0.0 && w <= 1.0))
                throw ModelError("routing probability outside [0,1] in row " + std::to_string(i + 1));
            sum += w;
        }
        if (std::abs(sum - 1.0) > row_sum_tolerance)
            throw ModelError("routing row " + std::to_string(i + 1) + " sums to " +
                             std::to_string(sum));
    }
    const auto fwd = reachable(p, reference, false);
    const auto bwd = reachable(p, reference, true);
    for (std::size_t i = 0; i < n; ++i)
        if (!fwd[i] || !bwd[i])
            throw ModelError("unreachable station " + std::to_string(i + 1));
    const double completion = p[reference][reference];
    if (completion <= 0.0) throw ModelError("no completion transition at the reference station");

    // v (P - I) = 0 with the reference equation replaced by v_ref = 1.
    Eigen::MatrixXd a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                p[i][j] - (i == j ? 1.0 : 0.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    const auto r = static_cast<Eigen::Index>(reference);
    a.row(r).setZero();
    a(r, r) = 1.0;
    rhs(r) = 1.0;
    const Eigen::VectorXd v = a.partialPivLu().solve(rhs);

    // One completion per job: scale so that v_ref * p_ref,ref = 1.
    std::vector<double> visits(n);
    for (std::size_t i = 0; i < n; ++i) visits[i] = v(static_cast<Eigen::Index>(i)) / completion;
    return visits;
}

std::vector<double> demands_from_visits(std::span<const double> visits,
                                        std::span<const double> service_times) {
    if (visits.size() != service_times.size())
        throw ModelError("visits and service times differ in length");
    std::vector<double> d(visits.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = visits[i] * service_times[i];
    return d;
}

std::vector<MvaSolution> mva_single(const QnModel& model, int population) {
    if (population < 1) throw ModelError("population must be at least 1");
    model.validate();
    if (model.classes != 1) throw ModelError("mva_single needs a single-class model");

    const std::size_t n_st = model.stations.size();
    const auto& x = model.demands[0];
    const double z = model.think_time(0);
    std::vector<double> q(n_st, 0.0);
    std::vector<MvaSolution> out;
    out.reserve(static_cast<std::size_t>(population));

    for (int k = 1; k <= population; ++k) {
        std::vector<double> r(n_st);
        double total = 0.0;
        for (std::size_t n = 0; n < n_st; ++n) {
            r[n] = model.stations[n].kind == StationKind::delay ? x[n] : x[n] * (1.0 + q[n]);
            total += r[n];
        }
        const double t = static_cast<double>(k) / (z + total);
        MvaSolution s;
        s.population = {k};
        s.throughput = {t};
        s.queue_len.assign(n_st, std::vector<double>(1));
        for (std::size_t n = 0; n < n_st; ++n) {
            q[n] = t * r[n];
            s.queue_len[n][0] = q[n];
        }
        s.residence = {std::move(r)};
        out.push_back(std::move(s));
    }
    return out;
}

ThroughputTable::ThroughputTable(std::vector<int> max_population)
    : max_pop_(std::move(max_population)), strides_(max_pop_.size()) {
    std::size_t stride = 1;
    for (std::size_t j = 0; j < max_pop_.size(); ++j) {
        if (max_pop_[j] < 0) throw ModelError("negative population");
        strides_[j] = stride;
        stride *= static_cast<std::size_t>(max_pop_[j]) + 1;
    }
    size_ = stride;
    values_.assign(size_ * max_pop_.size(), 0.0);
}

std::size_t ThroughputTable::index(std::span<const int> pop) const {
    if (pop.size() != max_pop_.size()) throw ModelError("population has wrong number of classes");
    std::size_t idx = 0;
    for (std::size_t j = 0; j < pop.size(); ++j) {
        if (pop[j] < 0 || pop[j] > max_pop_[j]) throw ModelError("population outside table");
        idx += static_cast<std::size_t>(pop[j]) * strides_[j];
    }
    return idx;
}

std::vector<int> ThroughputTable::population_at(std::size_t index) const {
    std::vector<int> pop(max_pop_.size());
    for (std::size_t j = 0; j < pop.size(); ++j) {
        const auto radix = static_cast<std::size_t>(max_pop_[j]) + 1;
        pop[j] = static_cast<int>(index % radix);
        index /= radix;
    }
    return pop;
}

std::vector<double> ThroughputTable::single_class_curve() const {
    if (classes() != 1) throw ModelError("throughput table is not single-class");
    std::vector<double> t(static_cast<std::size_t>(max_pop_[0]));
    for (std::size_t k = 1; k <= t.size(); ++k) t[k - 1] = throughput_at(k, 0);
    return t;
}

namespace {

// Lattice sweep; returns the table and the per-station total queue lengths
// at every lattice point (row-major [point][station]).
struct Lattice {
    ThroughputTable table;
    std::vector<double> queue;
};

Lattice run_lattice(const QnModel& model, std::span<const int> population, std::size_t budget) {
    model.validate();
    if (population.size() != model.classes)
        throw ModelError("population has " + std::to_string(population.size()) +
                         " entries for " + std::to_string(model.classes) + " classes");
    double lattice = 1.0;
    for (int k : population) {
        if (k < 0) throw ModelError("negative population");
        lattice *= static_cast<double>(k) + 1.0;
    }
    if (lattice > static_cast<double>(budget))
        throw ModelError("population lattice of " + std::to_string(static_cast<long double>(lattice)) +
                         " points exceeds the budget of " + std::to_string(budget));

    Lattice out{ThroughputTable(std::vector<int>(population.begin(), population.end())), {}};
    const std::size_t n_st = model.stations.size();
    const std::size_t n_cl = model.classes;
    out.queue.assign(out.table.size() * n_st, 0.0);
    std::vector<double> r(n_st);

    for (std::size_t idx = 1; idx < out.table.size(); ++idx) {
        const auto pop = out.table.population_at(idx);
        double* q = &out.queue[idx * n_st];
        for (std::size_t j = 0; j < n_cl; ++j) {
            if (pop[j] == 0) continue;
            const double* q_prev = &out.queue[(idx - out.table.stride(j)) * n_st];
            double total = 0.0;
            for (std::size_t n = 0; n < n_st; ++n) {
                const double x = model.demands[j][n];
                r[n] = model.stations[n].kind == StationKind::delay ? x : x * (1.0 + q_prev[n]);
                total += r[n];
            }
            const double t = static_cast<double>(pop[j]) / (model.think_time(j) + total);
            out.table.set_throughput_at(idx, j, t);
            for (std::size_t n = 0; n < n_st; ++n) q[n] += t * r[n];
        }
    }
    return out;
}

}  // namespace

ThroughputTable mva_multi(const QnModel& model, std::span<const int> population, std::size_t budget) {
    return run_lattice(model, population, budget).table;
}

MvaSolution mva_solve(const QnModel& model, std::span<const int> population, std::size_t budget) {
    const auto lat = run_lattice(model, population, budget);
    const std::size_t n_st = model.stations.size();
    const std::size_t n_cl = model.classes;
    const std::size_t top = lat.table.size() - 1;

    MvaSolution s;
    s.population.assign(population.begin(), population.end());
    s.throughput.assign(n_cl, 0.0);
    s.residence.assign(n_cl, std::vector<double>(n_st, 0.0));
    s.queue_len.assign(n_st, std::vector<double>(n_cl, 0.0));
    for (std::size_t j = 0; j < n_cl; ++j) {
        if (population[j] == 0) continue;
        const double* q_prev = &lat.queue[(top - lat.table.stride(j)) * n_st];
        const double t = lat.table.throughput_at(top, j);
        s.throughput[j] = t;
        for (std::size_t n = 0; n < n_st; ++n) {
            const double x = model.demands[j][n];
            s.residence[j][n] = model.stations[n].kind == StationKind::delay ? x : x * (1.0 + q_prev[n]);
            s.queue_len[n][j] = t * s.residence[j][n];
        }
    }
    return s;
}

double fj_completion_time(std::span<const double> throughputs, int tasks) {
    if (tasks < 1) throw ModelError("F/J request needs at least one task");
    if (throughputs.size() < static_cast<std::size_t>(tasks))
        throw ModelError("throughput characteristic shorter than the task count");
    double c = 0.0;
    for (int k = 1; k <= tasks; ++k) {
        const double t = throughputs[static_cast<std::size_t>(k - 1)];
        if (!(t > 0.0)) throw ModelError("non-positive throughput T(" + std::to_string(k) + ")");
        c += 1.0 / t;
    }
    return c;
}

}  // namespace hiermodel
