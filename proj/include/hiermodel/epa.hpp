#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiermodel/fesc.hpp"

namespace hiermodel {

/// Mean change of the concurrency J between completion instants, on [1, V].
/// Expected to decrease in J, positive below the equilibrium point.
struct DriftFunction {
    std::function<double(double)> a;
    double v = 1.0;  // maximum concurrency V
    double w = 0.0;  // MPL cap W, informational (0: none)
};

struct Equilibrium {
    double j_bar = 0.0;
    long j_rounded = 0;      // nearest grid point
    bool boundary = false;   // no sign change on [1, V]
    std::size_t iterations = 0;
};

/// Continuous bisection, finished by a linear interpolation step between the
/// last bracket ends (exact for linear drifts).
Equilibrium bisect_equilibrium(const DriftFunction& d, double tol = 1e-10);

/// Bisection on the integers 1..V down to the adjacent pair straddling the sign change;
/// j_rounded is the one with the smaller |A|. At most ceil(log2 V) steps.
Equilibrium bisect_equilibrium_integer(const DriftFunction& d);

/// Grid points 1..V where A rises; empty when A is non-increasing on the grid.
std::vector<std::string> drift_diagnostics(const DriftFunction& d);

/// Piecewise-linear drift through (J, A) points sorted by J.
DriftFunction tabulated_drift(std::vector<std::pair<double, double>> points);

/// Two-column CSV "J,A" with an optional header line.
DriftFunction parse_drift_csv(std::string_view text);

/// Birth-death drift (lambda - mu_J) / (lambda + mu_J) with mu linear between integers.
DriftFunction drift_from_birth_death(double lambda, const FescCharacteristic& c, double v);

/// M terminals with think time Z in front of a center with throughput T(N).
struct TerminalModel {
    int m = 1;
    double z = 1.0;
    std::vector<double> t;  // t[N-1] = T(N); held constant beyond its end

    double throughput(double n) const;  // piecewise linear, constant below N = 1
    std::vector<std::string> diagnostics() const;
    void validate() const;
};

struct Intersection {
    double n_star = 0.0;
    bool boundary = false;
    std::size_t iterations = 0;
};

/// Root of T(N) = (M - N)/Z on [0, M].
Intersection terminal_intersection(const TerminalModel& tm, double tol = 1e-12);

struct TerminalBalance {
    std::vector<double> p;  // p[N], N = 0..M
    double n_bar = 0.0;
    double throughput = 0.0;
};

/// ((M - N + 1)/Z) p(N-1) = T(N) p(N), normalized.
TerminalBalance exact_terminal_balance(const TerminalModel& tm);

/// Largest violation of the balance equations by p.
double balance_residual(const TerminalModel& tm, const std::vector<double>& p);

}  // namespace hiermodel
