#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hiermodel/qn.hpp"

namespace hiermodel {

struct Task {
    int id = 0;
    std::vector<double> demands;  // per device
};

/// DAG of tasks with per-device demands. The start and end dummies are implicit.
struct TaskSystem {
    std::vector<Task> tasks;
    std::vector<std::pair<int, int>> precedence;  // (predecessor id, successor id)
    std::vector<Station> stations;                // empty: all devices queueing

    std::size_t devices() const;
    std::vector<Station> device_stations() const;
    std::size_t index_of(int id) const;

    std::vector<std::string> diagnostics() const;
    void validate() const;
};

/// Bit i set means tasks[i] is a member.
using TaskSet = std::uint64_t;
inline constexpr std::size_t max_tasks = 62;

std::vector<std::size_t> members(TaskSet s);
std::string format_taskset(const TaskSystem& ts, TaskSet s);

/// Completion rates T_i(S) of the active tasks (indices into TaskSystem::tasks,
/// ascending), returned in the same order.
using ThroughputProvider = std::function<std::vector<double>(std::span<const std::size_t> active)>;

/// Each active task is its own MVA class with population 1.
ThroughputProvider mva_throughputs(const TaskSystem& ts);

/// How the mean delay D(R) combines the delays of predecessor states.
enum class DelayRule {
    conditional,  // D(R) = H(R) + sum p(S) b_R(S) D(S) / p(R)
    literal,      // D(R) = H(R) + sum p(S) b_R(S) D(S)
};

struct SweepOptions {
    DelayRule rule = DelayRule::conditional;
    std::size_t max_mpl = max_tasks;
};

struct ExecState {
    TaskSet tasks = 0;
    TaskSet completed = 0;
    int level = 0;
    double path_prob = 0.0;  // p(S)
    double delay = 0.0;      // D(S), mean time until S completes
    double prob = 0.0;       // P(S), normalized
    double holding = 0.0;    // H(S)
    std::vector<double> throughputs;  // T_i(S) for members(tasks), ascending

    bool is_start() const { return tasks == 0 && completed == 0; }
    bool is_final() const { return tasks == 0 && completed != 0; }
};

/// All levels L_0 .. L_{I+1}, fully evaluated.
std::vector<std::vector<ExecState>> build_levels(const TaskSystem& ts, const ThroughputProvider& tp,
                                                 const SweepOptions& opts = {});

struct TaskReport {
    double makespan = 0.0;
    std::vector<double> init, comp, exec;  // per task
    std::vector<double> exec_alt;          // C * sum of P(S) over states running the task
    std::vector<std::pair<TaskSet, double>> state_probs;
    std::vector<double> device_util;
    std::vector<std::size_t> level_sizes;
    double final_path_prob = 0.0;
};

/// Level-by-level sweep keeping only two adjacent levels live.
TaskReport analyze(const TaskSystem& ts, const ThroughputProvider& tp, const SweepOptions& opts = {});

/// Plain-text report: makespan, per-task timings, state probabilities, utilizations.
std::string format_report(const TaskSystem& ts, const TaskReport& r);

/// Graphviz rendering of the level graph with branching probabilities.
std::string to_dot(const TaskSystem& ts, const std::vector<std::vector<ExecState>>& levels);

struct NormalMoments {
    double mean = 0.0;
    double sd = 0.0;
};

/// Mean and standard deviation of the maximum of n i.i.d. normal variables.
NormalMoments max_normal_moments(NormalMoments x, int n);

/// mu + sigma * G(n) with the component moments pooled over `makespans`.
double max_normal(std::span<const NormalMoments> makespans, int n);

/// Maximum of groups*group_size variables taken as the max of `groups`
/// group maxima, each treated as normal.
double max_normal_two_step(NormalMoments x, int group_size, int groups);

}  // namespace hiermodel
