#include "hiermodel/stats.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hiermodel/errors.hpp"

namespace hiermodel {

ConfidenceInterval student_t_interval(std::span<const double> means, double confidence) {
    ConfidenceInterval ci;
    ci.samples = means.size();
    if (means.empty()) return ci;
    double sum = 0.0;
    for (double m : means) sum += m;
    ci.mean = sum / static_cast<double>(means.size());
    if (means.size() < 2) return ci;
    double ss = 0.0;
    for (double m : means) ss += (m - ci.mean) * (m - ci.mean);
    const double n = static_cast<double>(means.size());
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
    ci.half_width = t * sd / std::sqrt(n);
    return ci;
}

ConfidenceInterval normal_interval(double sum, double sum_sq, std::size_t n, double confidence) {
    ConfidenceInterval ci;
    ci.samples = n;
    if (n == 0) return ci;
    const double dn = static_cast<double>(n);
    ci.mean = sum / dn;
    if (n < 2) return ci;
    const double var = std::max(0.0, (sum_sq - dn * ci.mean * ci.mean) / (dn - 1.0));
    const boost::math::normal_distribution<> dist;
    const double z = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
    ci.half_width = z * std::sqrt(var / dn);
    return ci;
}

namespace {

// integral of x^power * n * phi(x) * Phi(x)^(n-1) over the real line
double max_normal_moment(int n, int power) {
    if (n < 1) throw ModelError("order statistic needs n >= 1");
    const auto integrand = [n, power](double x) {
        const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
        return std::pow(x, power) * n * phi * std::pow(cdf, n - 1);
    };
    // The density is negligible beyond |x| = 12 for any n of practical size.
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -12.0, 12.0, 15,
                                                                         1e-14, &err);
}

}  // namespace

double expected_max_std_normal(int n) {
    if (n == 1) return 0.0;
    return max_normal_moment(n, 1);
}

double second_moment_max_std_normal(int n) {
    if (n == 1) return 1.0;
    return max_normal_moment(n, 2);
}

}  // namespace hiermodel
