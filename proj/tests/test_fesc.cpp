#include <doctest.h>

#include <cmath>

#include "hiermodel/ctmc.hpp"
#include "hiermodel/errors.hpp"
#include "hiermodel/fesc.hpp"
#include "hiermodel/qn.hpp"

using namespace hiermodel;

TEST_CASE("flatten holds the last rate beyond the cap") {
    const std::vector<double> t{0.5, 2.0 / 3.0};
    const auto c = flatten(t, 2);
    CHECK(c.m_max() == 2);
    CHECK(c.rate(1) == 0.5);
    CHECK(c.rate(2) == 2.0 / 3.0);
    CHECK(c.rate(3) == 2.0 / 3.0);
    CHECK(c.rate(50) == 2.0 / 3.0);
    CHECK(flatten(t, 1).rate(7) == 0.5);
}

TEST_CASE("flatten of a balanced two-station curve") {
    const auto m = make_model(queueing_stations(2), {{1.0, 1.0}});
    std::vector<double> t;
    for (const auto& s : mva_single(m, 3)) t.push_back(s.throughput[0]);
    const auto c = flatten(t, 3);
    CHECK(c.rate(1) == doctest::Approx(0.5));
    CHECK(c.rate(2) == doctest::Approx(2.0 / 3.0));
    CHECK(c.rate(3) == doctest::Approx(0.75));
    CHECK(c.rate(4) == doctest::Approx(0.75));
}

TEST_CASE("flatten rejects bad curves") {
    const std::vector<double> bad{0.5, 0.0};
    CHECK_THROWS_AS(flatten(bad, 2), ModelError);
    CHECK_THROWS_AS(flatten(bad, 3), ModelError);
    CHECK_THROWS_AS(flatten(bad, 0), ModelError);
}

TEST_CASE("M/M/1 limit") {
    const FescCharacteristic c{{2.0}};
    for (double rho : {0.1, 0.5, 0.9, 0.99}) {
        const double lambda = rho * 2.0;
        const auto s = solve_birth_death(lambda, c);
        CHECK(std::abs(s.n_bar - rho / (1 - rho)) <= 1e-10 * std::max(1.0, rho / (1 - rho)));
        CHECK(s.r_system == doctest::Approx(1.0 / (2.0 - lambda)).epsilon(1e-10));
        CHECK(s.n_memq == doctest::Approx(rho * rho / (1 - rho)).epsilon(1e-10));
    }
}

TEST_CASE("M/M/infinity limit") {
    std::vector<double> rates(200);
    for (std::size_t k = 0; k < rates.size(); ++k) rates[k] = static_cast<double>(k + 1) * 0.5;
    const FescCharacteristic c{rates};
    const auto s = solve_birth_death(3.0, c);
    CHECK(std::abs(s.n_bar - 6.0) <= 1e-8);
    CHECK(s.n_memq < 1e-12);
}

TEST_CASE("M/M/c agrees with the Erlang C formula") {
    const int servers = 3;
    const double mu = 1.0, lambda = 2.4;
    const FescCharacteristic c{{1.0, 2.0, 3.0}};
    const auto s = solve_birth_death(lambda, c);
    const double a = lambda / mu, rho = a / servers;
    double sum = 0.0, term = 1.0;
    for (int k = 0; k < servers; ++k) {
        sum += term;
        term *= a / (k + 1);
    }
    const double last = term / (1 - rho);
    const double p_wait = last / (sum + last);
    const double lq = p_wait * rho / (1 - rho);
    CHECK(s.n_memq == doctest::Approx(lq).epsilon(1e-10));
    CHECK(s.n_bar == doctest::Approx(lq + a).epsilon(1e-10));
}

TEST_CASE("agrees with a direct solve of the truncated chain") {
    const FescCharacteristic c{{0.5, 2.0 / 3.0}};
    const double lambda = 0.4;
    const auto s = solve_birth_death(lambda, c, 1e-12);
    const std::size_t n = 10000;
    std::vector<Transition> tr;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        tr.push_back({k, k + 1, lambda});
        tr.push_back({k + 1, k, c.rate(k + 1)});
    }
    const auto ss = solve_direct(Ctmc(n, tr), n);
    double n_bar = 0.0, n_memq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        n_bar += static_cast<double>(k) * ss.pi[k];
        if (k > 2) n_memq += static_cast<double>(k - 2) * ss.pi[k];
    }
    CHECK(s.n_bar == doctest::Approx(n_bar).epsilon(1e-9));
    CHECK(s.n_memq == doctest::Approx(n_memq).epsilon(1e-9));
    CHECK(s.w_memq == doctest::Approx(n_memq / lambda).epsilon(1e-9));
}

TEST_CASE("solution invariants") {
    const FescCharacteristic c{{0.5, 0.8, 0.9}};
    const auto s = solve_birth_death(0.85, c);
    double sum = 0.0;
    for (double p : s.p) sum += p;
    CHECK(sum + s.truncation_mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(s.n_bar >= s.n_memq);
    CHECK(s.n_memq >= 0.0);
    CHECK(s.r_system == doctest::Approx(s.n_bar / 0.85));
}

TEST_CASE("mean population increases with load") {
    const FescCharacteristic c{{0.5, 0.8, 0.9}};
    double prev = 0.0;
    for (double lambda = 0.05; lambda < 0.9; lambda += 0.05) {
        const auto s = solve_birth_death(lambda, c);
        CHECK(s.n_bar > prev);
        prev = s.n_bar;
    }
}

TEST_CASE("truncation point barely matters") {
    const FescCharacteristic c{{0.5, 0.8, 0.9}};
    const auto a = solve_birth_death(0.8, c, 1e-8);
    const auto b = solve_birth_death(0.8, c, 1e-12);
    CHECK(std::abs(a.n_bar - b.n_bar) <= 10 * 1e-8 * b.n_bar);
}

TEST_CASE("saturation and argument checks") {
    const FescCharacteristic c{{0.5, 0.8}};
    CHECK_THROWS_AS(solve_birth_death(0.8, c), SaturationError);
    CHECK_THROWS_AS(solve_birth_death(1.0, c), SaturationError);
    CHECK_THROWS_AS(solve_birth_death(0.0, c), ModelError);
    CHECK_THROWS_AS(solve_birth_death(0.5, c, 1e-3), ModelError);
    CHECK_NOTHROW(solve_birth_death(0.79, c));
}

TEST_CASE("SATF speedup") {
    CHECK(satf_speedup(7.0, 1.0) == 7.0);
    CHECK(satf_speedup(10.0, 32.0) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(satf_speedup(1.0, 243.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(satf_speedup(1.0, 0.5), ModelError);
}
