#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hiermodel/qn.hpp"
#include "hiermodel/stats.hpp"
#include "hiermodel/task_system.hpp"

namespace hiermodel {

enum class CycleKind { fixed, geometric };

struct CycleSpec {
    CycleKind kind = CycleKind::fixed;
    double value = 1.0;  // n_i, or the mean for geometric counts
};

/// A task that repeats `cycles` passes over the devices; demands are per cycle.
struct HybridTask {
    int id = 0;
    std::vector<double> demands;
    CycleSpec cycles;
    double arrival = 0.0;
};

struct HybridEpoch {
    double time = 0.0;  // epoch end
    std::vector<std::size_t> active;
    /// Remaining demand per task at the end of the epoch (run_residual), or
    /// remaining cycles in the first column (run_cycles).
    std::vector<std::vector<double>> remaining;
};

struct HybridResult {
    std::vector<double> start, finish;  // per task, input order
    double makespan = 0.0;
    std::vector<HybridEpoch> epochs;
};

/// Cycle-counting loop: CT from multi-class MVA at the current mix, next event
/// is the earliest of the next arrival and min CR*CT. Geometric tasks need a
/// seed; their remaining cycle count is drawn once at arrival.
HybridResult run_cycles(const std::vector<HybridTask>& tasks, const std::vector<Station>& devices,
                        std::uint64_t seed = 1);

/// Residual-demand loop: demands shrink by (1 - t/R_i) after each constant-mix
/// epoch of length t. Totals are demands times the fixed cycle count.
HybridResult run_residual(const std::vector<HybridTask>& tasks, const std::vector<Station>& devices);

/// Completion rate of each active task, 1/(nbar_i * CT_i), for use with the task-system sweep.
ThroughputProvider cycle_throughputs(const std::vector<HybridTask>& tasks,
                                     const std::vector<Station>& devices);

/// Mean completion time with geometric cycle counts. Up to two tasks use the
/// closed form; more are handed to the task-system sweep with no precedence.
double geometric_completion(const std::vector<HybridTask>& tasks, const std::vector<Station>& devices);

/// Mean makespan of `replications` run_cycles replays with sampled counts.
ConfidenceInterval simulate_geometric(const std::vector<HybridTask>& tasks,
                                      const std::vector<Station>& devices, std::size_t replications,
                                      std::uint64_t seed, double confidence = 0.95);

/// Expected minimum of n independent U(0, x) cycle counts.
double min_uniform_cycles(int n, double x);

struct BackgroundClass {
    std::vector<double> demands;
    int population = 1;
};

/// Sum over phases of the phase's MVA residence time next to a fixed background mix.
double phased_residence(const std::vector<std::vector<double>>& phases,
                        const std::vector<BackgroundClass>& background,
                        const std::vector<Station>& devices);

}  // namespace hiermodel
