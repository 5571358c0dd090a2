#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "hiermodel/ctmc.hpp"
#include "hiermodel/fesc.hpp"

namespace hiermodel {

/// Static-locking transaction classes: only the declared pair may execute together,
/// every other combination conflicts. Txns are admitted in FCFS order.
struct LockModel {
    std::vector<double> freqs;                   // f_j, summing to 1
    std::array<std::size_t, 2> pair{0, 1};       // compatible classes (0-based)
    std::vector<double> rates;                   // T_j, class j executing alone
    std::array<double, 2> joint_rates{0.0, 0.0}; // T'_a, T'_b in the joint state
    double lambda = 0.0;                         // Poisson arrival rate

    std::size_t classes() const { return freqs.size(); }
    std::vector<std::string> diagnostics() const;
    void validate() const;
};

/// `printed` uses 2 f_1 f_4 T_3 in the row of the third class;
/// `symmetric` uses 2 f_1 f_2 T_3 like every other non-pair row.
enum class MatrixVariant { symmetric, printed };

/// One execution state: a single class running, or the compatible pair.
struct ExecComposition {
    std::size_t single = 0;  // class index when !joint
    bool joint = false;
};

struct ExecStateSpace {
    std::vector<ExecComposition> states;  // states with nonzero probability only
    Ctmc chain;
};

/// Rate matrix among execution states with two txns in the system and an
/// infinite FCFS backlog. States with zero frequency are left out.
ExecStateSpace build_exec_matrix(const LockModel& m, MatrixVariant variant = MatrixVariant::symmetric);

struct LockAggregate {
    std::vector<double> state_probs;   // aligned with ExecStateSpace::states
    std::vector<double> throughput;    // T_j(2)
    double total = 0.0;                // T(2)
    std::vector<double> n_bar;         // N_j(2), executing plus head of queue
    std::vector<double> admission;     // class-j admission rate implied by the chain
    double single_throughput = 0.0;    // T(1)
    std::vector<double> n_bar_single;  // N_j(1)
};

LockAggregate aggregate_throughputs(const LockModel& m, const ExecStateSpace& space,
                                    const SteadyState& ss);

struct LockResponse {
    std::vector<double> n_bar;     // per class, whole system
    std::vector<double> response;  // R_j = N_j / (f_j lambda); 0 when f_j = 0
    BirthDeathSolution birth_death;
};

/// Aggregated route: flattened FESC from T(1), T(2), birth-death over the
/// population, class split by the N_j(k) weights.
LockResponse response_times(const LockModel& m, const LockAggregate& agg, double lambda);

struct TwoLevelOptions {
    std::size_t capacity = 0;         // 0: grow until the blocking mass is below blocking_target
    double blocking_target = 1e-8;
    bool use_power_iteration = false;  // otherwise Gauss-Seidel
    double tol = 1e-13;
    std::size_t max_iter = 5'000'000;
};

struct TwoLevelSolution {
    std::size_t capacity = 0;
    double blocking = 0.0;          // probability the system is full
    std::vector<double> n_bar;      // per class
    std::vector<double> response;   // R_j = N_j / (f_j lambda)
    std::size_t states = 0;
    std::size_t iterations = 0;
};

/// Exact higher-level chain over (execution composition, txns in system).
TwoLevelSolution solve_two_level(const LockModel& m, double lambda, const TwoLevelOptions& opts = {});

}  // namespace hiermodel
