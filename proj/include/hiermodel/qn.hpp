#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hiermodel {

enum class StationKind { queueing, delay };

struct Station {
    int id = 0;  // 1-based, contiguous
    StationKind kind = StationKind::queueing;
    std::string name;
};

/// Closed product-form network. demands[j][n] is the total service demand
/// (visits x mean service time) of class j at station n.
struct QnModel {
    std::vector<Station> stations;
    std::size_t classes = 0;
    std::vector<std::vector<double>> demands;
    std::vector<double> think_times;  // empty means zero for every class

    double think_time(std::size_t j) const { return think_times.empty() ? 0.0 : think_times[j]; }

    /// Every violated invariant, one message each; empty when valid.
    std::vector<std::string> diagnostics() const;
    /// Throws ModelError on the first diagnostic.
    void validate() const;
};

/// Model with `stations` and one class per demand row.
QnModel make_model(std::vector<Station> stations, std::vector<std::vector<double>> demands,
                   std::vector<double> think_times = {});

/// Stations 1..n, all queueing.
std::vector<Station> queueing_stations(std::size_t n);

using RoutingMatrix = std::vector<std::vector<double>>;

struct MvaSolution {
    std::vector<int> population;
    std::vector<double> throughput;               // [class]
    std::vector<std::vector<double>> residence;   // [class][station]
    std::vector<std::vector<double>> queue_len;   // [station][class]

    /// Total residence of class j over all stations, think time excluded.
    double response(std::size_t j) const;
};

/// Relative visit counts per job from a routing matrix where the reference
/// station's self-transition p[ref][ref] marks job completion: v[ref] = 1/p[ref][ref].
std::vector<double> visits_from_routing(const RoutingMatrix& p, std::size_t reference);

/// demands[n] = visits[n] * service_times[n]
std::vector<double> demands_from_visits(std::span<const double> visits,
                                        std::span<const double> service_times);

/// Single-class exact MVA for k = 1..population; element k-1 holds population k.
std::vector<MvaSolution> mva_single(const QnModel& model, int population);

/// T_j over the full lattice 0 <= k_j <= K_j, stored densely in mixed radix
/// (class 0 varies fastest).
class ThroughputTable {
public:
    ThroughputTable() = default;
    explicit ThroughputTable(std::vector<int> max_population);

    std::size_t classes() const { return max_pop_.size(); }
    const std::vector<int>& max_population() const { return max_pop_; }
    std::size_t size() const { return size_; }

    std::size_t index(std::span<const int> pop) const;
    std::vector<int> population_at(std::size_t index) const;
    std::size_t stride(std::size_t j) const { return strides_[j]; }

    double throughput(std::span<const int> pop, std::size_t j) const {
        return values_[index(pop) * classes() + j];
    }
    double throughput_at(std::size_t index, std::size_t j) const {
        return values_[index * classes() + j];
    }
    void set_throughput_at(std::size_t index, std::size_t j, double t) {
        values_[index * classes() + j] = t;
    }

    /// Single-class characteristic T(1..K); requires classes() == 1.
    std::vector<double> single_class_curve() const;

private:
    std::vector<int> max_pop_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
    std::vector<double> values_;
};

inline constexpr std::size_t default_lattice_budget = 1'000'000;

/// Multi-class exact MVA over every sub-population of `population`.
ThroughputTable mva_multi(const QnModel& model, std::span<const int> population,
                          std::size_t budget = default_lattice_budget);

/// Full solution at one population, computed through the same lattice recursion.
MvaSolution mva_solve(const QnModel& model, std::span<const int> population,
                      std::size_t budget = default_lattice_budget);

/// Mean time for a death process with rates T(K), ..., T(1) to empty:
/// sum over k of 1/T(k). throughputs[k-1] holds T(k).
double fj_completion_time(std::span<const double> throughputs, int tasks);

}  // namespace hiermodel
