#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hiermodel/errors.hpp"
#include "hiermodel/hiersim.hpp"
#include "hiermodel/task_system.hpp"
#include "oracles.hpp"

using namespace hiermodel;

namespace {

TaskSystem six_task_system() {
    TaskSystem ts;
    const std::vector<double> light{420, 400, 400}, heavy{620, 600, 600};
    ts.tasks = {{1, light}, {2, light}, {3, heavy}, {4, heavy}, {5, light}, {6, light}};
    ts.precedence = {{1, 3}, {2, 3}, {4, 5}, {4, 6}};
    return ts;
}

std::set<std::set<int>> level_sets(const TaskSystem& ts, const std::vector<ExecState>& level) {
    std::set<std::set<int>> out;
    for (const auto& s : level) {
        std::set<int> ids;
        for (auto i : members(s.tasks)) ids.insert(ts.tasks[i].id);
        out.insert(ids);
    }
    return out;
}

ThroughputProvider fixed_rates(double alone, double together) {
    return [=](std::span<const std::size_t> active) {
        return std::vector<double>(active.size(), active.size() == 1 ? alone : together);
    };
}

}  // namespace

TEST_CASE("six-task system reproduces the level table") {
    const auto ts = six_task_system();
    const auto levels = build_levels(ts, mva_throughputs(ts));
    std::vector<std::size_t> sizes;
    for (const auto& l : levels) sizes.push_back(l.size());
    CHECK(sizes == std::vector<std::size_t>{1, 1, 3, 5, 7, 5, 3, 1});

    using S = std::set<std::set<int>>;
    CHECK(levels[0].front().is_start());
    CHECK(level_sets(ts, levels[1]) == S{{1, 2, 4}});
    CHECK(level_sets(ts, levels[2]) == S{{1, 4}, {2, 4}, {1, 2, 5, 6}});
    CHECK(level_sets(ts, levels[3]) == S{{1, 2, 5}, {1, 2, 6}, {1, 5, 6}, {2, 5, 6}, {3, 4}});
    CHECK(level_sets(ts, levels[4]) == S{{1, 2}, {1, 5}, {1, 6}, {2, 5}, {2, 6}, {3, 5, 6}, {4}});
    CHECK(level_sets(ts, levels[5]) == S{{1}, {2}, {3, 5}, {3, 6}, {5, 6}});
    CHECK(level_sets(ts, levels[6]) == S{{3}, {5}, {6}});
    CHECK(levels[7].front().is_final());
}

TEST_CASE("state invariants on the six-task system") {
    const auto ts = six_task_system();
    const auto levels = build_levels(ts, mva_throughputs(ts));
    double total_prob = 0.0;
    for (const auto& level : levels)
        for (const auto& s : level) {
            total_prob += s.prob;
            if (s.is_start() || s.is_final()) continue;
            double rate = 0.0;
            for (double t : s.throughputs) rate += t;
            CHECK(s.holding == doctest::Approx(1.0 / rate).epsilon(1e-14));
            double branch = 0.0;
            for (double t : s.throughputs) branch += t * s.holding;
            CHECK(std::abs(branch - 1.0) <= 1e-12);
        }
    CHECK(total_prob == doctest::Approx(1.0).epsilon(1e-12));

    const auto r = analyze(ts, mva_throughputs(ts));
    CHECK(std::abs(r.final_path_prob - 1.0) <= 1e-10);
    double comp_max = 0.0;
    for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
        CHECK(r.init[i] <= r.comp[i]);
        comp_max = std::max(comp_max, r.comp[i]);
        CHECK(std::abs(r.exec[i] - r.exec_alt[i]) <= 0.02 * r.exec[i]);
    }
    CHECK(r.makespan >= comp_max - 1e-9);
    CHECK(r.init[0] == 0.0);
    CHECK(r.init[3] == 0.0);
    for (double u : r.device_util) CHECK((u > 0.0 && u < 1.0));
}

TEST_CASE("six-task makespan falls inside a simulation interval") {
    const auto ts = six_task_system();
    const auto tp = mva_throughputs(ts);
    const double c = analyze(ts, tp).makespan;
    const auto ci = simulate_task_makespan(ts, tp, 100000, 2024);
    CHECK(ci.contains(c));
}

TEST_CASE("completing task 4 first activates 5 and 6") {
    const auto ts = six_task_system();
    const auto levels = build_levels(ts, mva_throughputs(ts));
    const auto& first = levels[1].front();
    const auto act = members(first.tasks);
    CHECK(act.size() == 3);
    CHECK(level_sets(ts, levels[2]).count({1, 2, 5, 6}) == 1);
}

TEST_CASE("a chain visits singletons and sums residences") {
    TaskSystem ts;
    ts.tasks = {{1, {2.0, 1.0}}, {2, {1.0, 3.0}}, {3, {0.5, 0.5}}};
    ts.precedence = {{1, 2}, {2, 3}};
    const auto levels = build_levels(ts, mva_throughputs(ts));
    CHECK(levels.size() == 5);
    for (std::size_t l = 1; l <= 3; ++l) {
        CHECK(levels[l].size() == 1);
        CHECK(members(levels[l].front().tasks).size() == 1);
    }
    const auto r = analyze(ts, mva_throughputs(ts));
    CHECK(r.makespan == doctest::Approx(3.0 + 4.0 + 1.0).epsilon(1e-14));
    CHECK(r.init[1] == doctest::Approx(3.0));
    CHECK(r.comp[2] == doctest::Approx(8.0));
    SweepOptions lit;
    lit.rule = DelayRule::literal;
    CHECK(analyze(ts, mva_throughputs(ts), lit).makespan == doctest::Approx(8.0));
}

TEST_CASE("single task") {
    TaskSystem ts;
    ts.tasks = {{7, {3.0, 2.0}}};
    const auto r = analyze(ts, mva_throughputs(ts));
    CHECK(r.makespan == doctest::Approx(5.0));
    CHECK(r.init[0] == 0.0);
    CHECK(r.comp[0] == doctest::Approx(5.0));
    CHECK(r.device_util[0] == doctest::Approx(0.6));
    CHECK(r.device_util[1] == doctest::Approx(0.4));
}

TEST_CASE("two independent identical tasks take 7.5 + 10") {
    TaskSystem ts;
    ts.tasks = {{1, {1.0}}, {2, {1.0}}};
    const auto r = analyze(ts, fixed_rates(0.1, 1.0 / 15.0));
    CHECK(r.makespan == doctest::Approx(17.5).epsilon(1e-14));
    CHECK(r.exec[0] == doctest::Approx(r.exec_alt[0]).epsilon(1e-12));
}

TEST_CASE("conditional and literal delay rules differ once paths branch") {
    TaskSystem ts;
    ts.tasks = {{1, {1.0}}, {2, {1.0}}};
    SweepOptions lit;
    lit.rule = DelayRule::literal;
    const double a = analyze(ts, fixed_rates(0.1, 1.0 / 15.0)).makespan;
    const double b = analyze(ts, fixed_rates(0.1, 1.0 / 15.0), lit).makespan;
    CHECK(a != doctest::Approx(b));
}

TEST_CASE("all small DAGs match the absorbing-chain oracle") {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> dist(0.5, 4.0);
    int checked = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
        for (unsigned mask = 0; mask < (1u << pairs.size()); ++mask) {
            TaskSystem ts;
            for (std::size_t i = 0; i < n; ++i) ts.tasks.push_back({static_cast<int>(i + 1), {dist(gen), dist(gen)}});
            std::vector<unsigned> preds(n, 0);
            for (std::size_t e = 0; e < pairs.size(); ++e)
                if (mask & (1u << e)) {
                    ts.precedence.emplace_back(static_cast<int>(pairs[e].first + 1), static_cast<int>(pairs[e].second + 1));
                    preds[pairs[e].second] |= 1u << pairs[e].first;
                }
            const auto tp = mva_throughputs(ts);
            const double want = oracle::dag_makespan(preds, [&](const std::vector<std::size_t>& act) { return tp(act); });
            const double got = analyze(ts, tp).makespan;
            CHECK(got == doctest::Approx(want).epsilon(1e-8));
            ++checked;
        }
    }
    CHECK(checked == 1 + 2 + 8 + 64);
}

TEST_CASE("cycles are reported with a witness") {
    TaskSystem ts;
    ts.tasks = {{1, {1.0}}, {2, {1.0}}, {3, {1.0}}};
    ts.precedence = {{1, 2}, {2, 3}, {3, 1}};
    CHECK_THROWS_WITH_AS(analyze(ts, mva_throughputs(ts)), doctest::Contains("->"), ModelError);
    const auto d = ts.diagnostics();
    REQUIRE(d.size() == 1);
    CHECK(d[0].find("cycle") != std::string::npos);
}

TEST_CASE("MPL cap") {
    TaskSystem ts;
    ts.tasks = {{1, {1.0}}, {2, {1.0}}, {3, {1.0}}};
    SweepOptions o;
    o.max_mpl = 2;
    CHECK_THROWS_AS(analyze(ts, mva_throughputs(ts), o), ModelError);
    o.max_mpl = 3;
    CHECK_NOTHROW(analyze(ts, mva_throughputs(ts), o));
}

TEST_CASE("structural diagnostics") {
    TaskSystem ts;
    ts.tasks = {{1, {1.0, 2.0}}, {1, {1.0}}};
    ts.precedence = {{1, 9}};
    CHECK(ts.diagnostics().size() >= 3);
}

TEST_CASE("DOT export") {
    const auto ts = six_task_system();
    const auto dot = to_dot(ts, build_levels(ts, mva_throughputs(ts)));
    CHECK(dot.find("digraph") == 0);
    CHECK(dot.find("\"{1,2,4}\" -> \"{1,2,5,6}\"") != std::string::npos);
}

TEST_CASE("maximum of normal makespans") {
    const std::vector<NormalMoments> one{{10.0, 2.0}};
    CHECK(max_normal(one, 1) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(max_normal(one, 2) == doctest::Approx(10.0 + 2.0 / std::sqrt(M_PI)).epsilon(1e-10));
    CHECK_THROWS_AS(max_normal(one, 0), ModelError);

    // Two-step composition of nine variables against Monte Carlo.
    std::mt19937_64 gen(5);
    std::normal_distribution<double> z(10.0, 2.0);
    const int reps = 200000;
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) {
        double m = -1e300;
        for (int k = 0; k < 9; ++k) m = std::max(m, z(gen));
        sum += m;
    }
    CHECK(max_normal_two_step({10.0, 2.0}, 3, 3) == doctest::Approx(sum / reps).epsilon(0.01));
}
