#include "hiermodel/fesc.hpp"

#include <cmath>
#include <string>

#include "hiermodel/errors.hpp"

namespace hiermodel {

FescCharacteristic flatten(std::span<const double> throughputs, int m_max) {
    if (m_max < 1) throw ModelError("m_max must be at least 1");
    if (throughputs.size() < static_cast<std::size_t>(m_max))
        throw ModelError("throughput characteristic has " + std::to_string(throughputs.size()) +
                         " points, m_max is " + std::to_string(m_max));
    FescCharacteristic c;
    c.rates.assign(throughputs.begin(), throughputs.begin() + m_max);
    for (std::size_t k = 0; k < c.rates.size(); ++k)
        if (!(c.rates[k] > 0.0) || !std::isfinite(c.rates[k]))
            throw ModelError("non-positive throughput T(" + std::to_string(k + 1) + ")");
    return c;
}

BirthDeathSolution solve_birth_death(double lambda, const FescCharacteristic& c, double epsilon) {
    if (c.rates.empty()) throw ModelError("empty FESC characteristic");
    if (!(lambda > 0.0)) throw ModelError("arrival rate must be positive");
    if (!(epsilon > 0.0 && epsilon <= 1e-6)) throw ModelError("epsilon must lie in (0, 1e-6]");
    if (!(lambda < c.max_rate()))
        throw SaturationError("the system will become saturated: lambda = " + std::to_string(lambda) +
                              " >= T(M_max) = " + std::to_string(c.max_rate()));

    const std::size_t m = static_cast<std::size_t>(c.m_max());
    std::vector<double> p{1.0};
    double sum = 1.0;
    for (std::size_t k = 1;; ++k) {
        const double pk = p.back() * lambda / c.rate(k);
        p.push_back(pk);
        sum += pk;
        if (k > m && pk <= epsilon * sum) break;
    }

    // Past the cap the rates are constant, so the tail beyond k_stop is
    // geometric with ratio lambda / mu_max and its sums have closed forms.
    const double r = lambda / c.max_rate();
    const double k_stop = static_cast<double>(p.size() - 1);
    const double head = p.back();
    const double tail_mass = head * r / (1.0 - r);
    const double tail_first = head * r / ((1.0 - r) * (1.0 - r));
    sum += tail_mass;

    BirthDeathSolution s;
    s.truncation_mass = tail_mass / sum;
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] /= sum;
        s.n_bar += static_cast<double>(k) * p[k];
        if (k >= m) s.n_memq += static_cast<double>(k - m) * p[k];
    }
    s.n_bar += (k_stop * tail_mass + tail_first) / sum;
    s.n_memq += ((k_stop - static_cast<double>(m)) * tail_mass + tail_first) / sum;
    s.p = std::move(p);
    s.r_system = s.n_bar / lambda;
    s.w_memq = s.n_memq / lambda;
    return s;
}

double satf_speedup(double base_service, double pending) {
    if (!(base_service > 0.0)) throw ModelError("service time must be positive");
    if (!(pending >= 1.0)) throw ModelError("pending request count must be at least 1");
    return base_service / std::pow(pending, 0.2);
}

}  // namespace hiermodel
