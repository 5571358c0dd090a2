#include <doctest.h>

#include <cmath>
#include <random>

#include "hiermodel/ctmc.hpp"
#include "hiermodel/errors.hpp"
#include "hiermodel/txn_lock.hpp"

using namespace hiermodel;

namespace {

Ctmc random_chain(std::size_t n, unsigned seed, double extra_per_state = 3.0) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> rate(0.1, 5.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<Transition> tr;
    for (std::size_t i = 0; i < n; ++i) tr.push_back({i, (i + 1) % n, rate(gen)});  // ring keeps it irreducible
    const auto extra = static_cast<std::size_t>(extra_per_state * static_cast<double>(n));
    for (std::size_t k = 0; k < extra; ++k) {
        const auto a = pick(gen), b = pick(gen);
        if (a != b) tr.push_back({a, b, rate(gen)});
    }
    return Ctmc(n, tr);
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("two-state chain follows detailed balance") {
    const double a = 2.0, b = 3.0;
    const std::vector<Transition> tr{{0, 1, a}, {1, 0, b}};
    const Ctmc c(2, tr);
    for (const auto& pi : {solve_direct(c).pi, power_iterate(c).pi, gauss_seidel(c).pi}) {
        CHECK(pi[0] == doctest::Approx(b / (a + b)).epsilon(1e-10));
        CHECK(pi[1] == doctest::Approx(a / (a + b)).epsilon(1e-10));
    }
}

TEST_CASE("uniform three-cycle") {
    const std::vector<Transition> tr{{0, 1, 1}, {1, 2, 1}, {2, 0, 1}};
    const auto s = solve_direct(Ctmc(3, tr));
    for (double p : s.pi) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s.residual <= 1e-10);
}

TEST_CASE("power iteration with an explicit scale") {
    const std::vector<Transition> tr{{0, 1, 1}, {1, 0, 1}};
    IterativeOptions o;
    o.c_scale = 0.4;
    const auto s = power_iterate(Ctmc(2, tr), o);
    CHECK(s.pi[0] == doctest::Approx(0.5));
    o.c_scale = 1.5;
    CHECK_THROWS_AS(power_iterate(Ctmc(2, tr), o), ModelError);
}

TEST_CASE("starting at the answer converges at once") {
    const auto c = random_chain(30, 3);
    const auto exact = solve_direct(c);
    IterativeOptions o;
    o.initial = exact.pi;
    o.tol = 1e-9;
    CHECK(power_iterate(c, o).iterations == 1);
}

TEST_CASE("truncated M/M/1 by Gauss-Seidel") {
    std::vector<Transition> tr;
    for (std::size_t k = 0; k + 1 < 20; ++k) {
        tr.push_back({k, k + 1, 1.0});
        tr.push_back({k + 1, k, 2.0});
    }
    const auto s = gauss_seidel(Ctmc(20, tr));
    const double norm = (1.0 - std::pow(0.5, 20)) / 0.5;
    for (std::size_t k = 0; k < 20; ++k) CHECK(s.pi[k] == doctest::Approx(std::pow(0.5, k) / norm).epsilon(1e-9));
}

TEST_CASE("iterative solvers match the direct solve") {
    for (const std::size_t n : {50u, 200u, 500u}) {
        const auto c = random_chain(n, static_cast<unsigned>(n));
        const auto d = solve_direct(c);
        const auto p = power_iterate(c);
        const auto g = gauss_seidel(c);
        CHECK(max_diff(d.pi, p.pi) <= 1e-8);
        CHECK(max_diff(d.pi, g.pi) <= 1e-8);
        CHECK(d.residual <= 1e-10);
        for (double x : p.pi) CHECK(x >= 0.0);
    }
}

TEST_CASE("six-state lock chain: direct and power iteration agree") {
    LockModel m;
    m.freqs.assign(5, 0.2);
    m.rates.assign(5, 1.0);
    m.joint_rates = {1.0, 1.0};
    const auto space = build_exec_matrix(m);
    CHECK(space.chain.size() == 6);
    CHECK(max_diff(solve_direct(space.chain).pi, power_iterate(space.chain).pi) <= 1e-9);
}

TEST_CASE("stationary vector is scale invariant") {
    const auto c = random_chain(40, 11);
    const auto base = solve_direct(c).pi;
    for (double f : {0.1, 10.0}) CHECK(max_diff(base, solve_direct(c.scaled(f)).pi) <= 1e-12);
}

TEST_CASE("construction checks and merging") {
    const std::vector<Transition> dup{{0, 1, 1.0}, {0, 1, 2.0}, {1, 0, 0.0}, {1, 0, 4.0}};
    const Ctmc c(2, dup);
    CHECK(c.row(0).size() == 1);
    CHECK(c.row(0)[0].rate == 3.0);
    CHECK(c.out_rate(1) == 4.0);
    CHECK(c.column(0)[0].index == 1);
    const std::vector<Transition> diag{{0, 0, 1.0}};
    CHECK_THROWS_AS(Ctmc(2, diag), ModelError);
    const std::vector<Transition> neg{{0, 1, -1.0}};
    CHECK_THROWS_AS(Ctmc(2, neg), ModelError);
    const std::vector<Transition> out{{0, 5, 1.0}};
    CHECK_THROWS_AS(Ctmc(2, out), ModelError);
}

TEST_CASE("reducible chains are rejected with their components") {
    const std::vector<Transition> tr{{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}};
    const Ctmc c(3, tr);
    CHECK(strongly_connected_components(c).size() == 2);
    CHECK_THROWS_WITH_AS(solve_direct(c), doctest::Contains("{2}"), ModelError);
}

TEST_CASE("non-convergence is reported") {
    const auto c = random_chain(50, 5);
    IterativeOptions o;
    o.max_iter = 3;
    CHECK_THROWS_AS(power_iterate(c, o), ConvergenceError);
    CHECK_THROWS_AS(gauss_seidel(c, o), ConvergenceError);
}

TEST_CASE("direct solve budget") {
    const auto c = random_chain(60, 1);
    CHECK_THROWS_AS(solve_direct(c, 50), ModelError);
}
