#pragma once

#include <cstddef>
#include <span>

namespace hiermodel {

struct ConfidenceInterval {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t samples = 0;

    bool contains(double x) const { return x >= mean - half_width && x <= mean + half_width; }
};

/// Student-t interval over independent (batch or replication) means.
ConfidenceInterval student_t_interval(std::span<const double> means, double confidence = 0.95);

/// Interval from running sums of an i.i.d. sample.
ConfidenceInterval normal_interval(double sum, double sum_sq, std::size_t n, double confidence = 0.95);

/// E[max of n standard normal variates], by quadrature of the order-statistic integral.
double expected_max_std_normal(int n);

/// E[(max of n standard normal variates)^2].
double second_moment_max_std_normal(int n);

}  // namespace hiermodel
