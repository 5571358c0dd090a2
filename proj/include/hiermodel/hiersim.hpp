#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hiermodel/fesc.hpp"
#include "hiermodel/qn.hpp"
#include "hiermodel/stats.hpp"
#include "hiermodel/task_system.hpp"

namespace hiermodel {

/// How in-service execution times react to a change of the class mix.
enum class ServiceMode {
    memoryless,  // every change of (k_1, k_2) resamples all in-service jobs at T_j(k)/k_j
    literal,     // one Exp(T_j(k_1, k_2)) draw at activation, never revisited
};

/// Two-class timesharing system: terminals with exponential think times, an MPL
/// cap per class, and a CPU (PS) plus FCFS disks replaced by a two-class FESC.
/// Times are in milliseconds. A class with zero terminals is switched off.
struct TimesharingConfig {
    std::array<int, 2> terminals{20, 2};
    std::array<int, 2> mpl{4, 2};
    std::array<double, 2> think{5000.0, 100000.0};
    std::array<double, 2> cpu_demand{100.0, 2000.0};
    std::array<double, 2> disk_demand{87.5, 175.0};  // per disk
    int disks = 4;
    std::array<long, 2> n_comp_target{10000, 10000};
    int num_batches = 10;
    int warmup_batches = 1;
    std::uint64_t seed = 1;
    double confidence = 0.95;
    ServiceMode mode = ServiceMode::memoryless;

    bool active(std::size_t j) const { return terminals[j] > 0; }
    std::vector<std::string> diagnostics() const;
    void validate() const;
};

/// Preset cases 1..9: terminal counts and MPL caps with the standard think times and demands.
TimesharingConfig preset_case(int case_number);

/// CPU plus disks, one class per user set, no terminals.
QnModel computer_model(const TimesharingConfig& cfg);

/// T_j(k_1, k_2) over 0 <= k_j <= K_j.
ThroughputTable precompute_fesc(const TimesharingConfig& cfg);

struct ClassReport {
    long completions = 0;  // measured batches only
    ConfidenceInterval response;
    ConfidenceInterval throughput;
    ConfidenceInterval in_system;
    std::vector<double> batch_response;
    std::vector<double> batch_throughput;
};

struct SimReport {
    std::array<ClassReport, 2> classes;
    double simulated_time = 0.0;
    double measured_time = 0.0;
    std::uint64_t events = 0;
    std::uint64_t seed = 0;
};

SimReport simulate(const TimesharingConfig& cfg);

struct ExactTimesharing {
    std::array<double, 2> response{0.0, 0.0};
    std::array<double, 2> throughput{0.0, 0.0};
    std::array<double, 2> n_bar{0.0, 0.0};
    std::size_t states = 0;
};

/// Exact higher-level chain over the number of class-1 and class-2 requests at
/// the computer, solved directly.
ExactTimesharing solve_exact(const TimesharingConfig& cfg);

/// Single-class FESC with Poisson arrivals and an MPL-capped FCFS memory queue.
struct OpenConfig {
    double lambda = 0.0;
    FescCharacteristic fesc;
    long n_comp_target = 10000;
    int num_batches = 10;
    int warmup_batches = 1;
    std::uint64_t seed = 1;
    double confidence = 0.95;
};

ClassReport simulate_open(const OpenConfig& cfg);

/// Makespan of a task system replayed as a discrete-event simulation of the
/// exponential holding times, over independent replications.
ConfidenceInterval simulate_task_makespan(const TaskSystem& ts, const ThroughputProvider& tp,
                                          std::size_t replications, std::uint64_t seed,
                                          double confidence = 0.95);

}  // namespace hiermodel
