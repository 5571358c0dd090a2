#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hiermodel {

/// State-dependent service rates of a flow-equivalent service center.
/// rate(k) = T(k) up to the MPL cap and T(m_max) beyond it.
struct FescCharacteristic {
    std::vector<double> rates;  // rates[k-1] = mu_k for k = 1..m_max

    int m_max() const { return static_cast<int>(rates.size()); }
    double rate(std::size_t k) const {
        return k >= rates.size() ? rates.back() : rates[k - 1];
    }
    double max_rate() const { return rates.back(); }
};

struct BirthDeathSolution {
    std::vector<double> p;  // p[k] for k = 0..k_stop
    double n_bar = 0.0;
    double n_memq = 0.0;
    double r_system = 0.0;
    double w_memq = 0.0;
    double truncation_mass = 0.0;  // bound on the mass beyond k_stop
};

inline constexpr double default_birth_death_epsilon = 1e-12;

/// throughputs[k-1] = T(k), k = 1..m_max (at least m_max entries).
FescCharacteristic flatten(std::span<const double> throughputs, int m_max);

/// Poisson arrivals at rate lambda into the center. The recursion stops once the
/// unnormalized p_k drops to epsilon times the running sum past the MPL cap.
BirthDeathSolution solve_birth_death(double lambda, const FescCharacteristic& c,
                                     double epsilon = default_birth_death_epsilon);

/// Disk service time under shortest-access-time-first with p pending requests.
double satf_speedup(double base_service, double pending);

}  // namespace hiermodel
