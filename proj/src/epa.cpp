#include "hiermodel/epa.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "hiermodel/errors.hpp"

namespace hiermodel {

namespace {

void check_range(const DriftFunction& d) {
    if (!d.a) throw ModelError("drift function is empty");
    if (!(d.v >= 1.0) || !std::isfinite(d.v)) throw ModelError("V must be at least 1");
}

double lerp_table(const std::vector<double>& y, double x) {
    // y[k] sits at x = k + 1; constant outside the table.
    if (x <= 1.0) return y.front();
    const double pos = x - 1.0;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= y.size()) return y.back();
    const double frac = pos - static_cast<double>(k);
    return y[k] + frac * (y[k + 1] - y[k]);
}

}  // namespace

Equilibrium bisect_equilibrium(const DriftFunction& d, double tol) {
    check_range(d);
    if (!(tol > 0.0)) throw ModelError("tolerance must be positive");
    Equilibrium e;
    double lo = 1.0, hi = d.v;
    double a_lo = d.a(lo), a_hi = d.a(hi);
    if (a_lo < 0.0 || a_hi > 0.0) {
        e.boundary = true;
        e.j_bar = a_lo < 0.0 ? lo : hi;
        e.j_rounded = std::lround(e.j_bar);
        return e;
    }
    while (hi - lo > tol * std::max(1.0, d.v) && a_lo != 0.0 && a_hi != 0.0) {
        const double mid = 0.5 * (lo + hi);
        const double a_mid = d.a(mid);
        ++e.iterations;
        if (a_mid >= 0.0) {
            lo = mid;
            a_lo = a_mid;
        } else {
            hi = mid;
            a_hi = a_mid;
        }
    }
    if (a_lo == 0.0)
        e.j_bar = lo;
    else if (a_hi == 0.0)
        e.j_bar = hi;
    else
        e.j_bar = lo + a_lo * (hi - lo) / (a_lo - a_hi);
    e.j_rounded = std::lround(e.j_bar);
    return e;
}

Equilibrium bisect_equilibrium_integer(const DriftFunction& d) {
    check_range(d);
    Equilibrium e;
    long lo = 1, hi = static_cast<long>(std::floor(d.v));
    if (d.a(static_cast<double>(lo)) < 0.0 || d.a(static_cast<double>(hi)) >= 0.0) {
        e.boundary = true;
        e.j_rounded = d.a(static_cast<double>(lo)) < 0.0 ? lo : hi;
        e.j_bar = static_cast<double>(e.j_rounded);
        return e;
    }
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        ++e.iterations;
        (d.a(static_cast<double>(mid)) >= 0.0 ? lo : hi) = mid;
    }
    const double a_lo = d.a(static_cast<double>(lo));
    const double a_hi = d.a(static_cast<double>(hi));
    e.j_rounded = std::abs(a_lo) <= std::abs(a_hi) ? lo : hi;
    e.j_bar = static_cast<double>(lo) + a_lo / (a_lo - a_hi);
    return e;
}

std::vector<std::string> drift_diagnostics(const DriftFunction& d) {
    check_range(d);
    std::vector<std::string> out;
    const auto last = static_cast<long>(std::floor(d.v));
    double prev = d.a(1.0);
    for (long j = 2; j <= last; ++j) {
        const double cur = d.a(static_cast<double>(j));
        if (cur > prev) out.push_back("drift rises between J=" + std::to_string(j - 1) + " and J=" + std::to_string(j));
        prev = cur;
    }
    return out;
}

DriftFunction tabulated_drift(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2) throw ModelError("a tabulated drift needs at least two points");
    for (std::size_t k = 1; k < points.size(); ++k)
        if (!(points[k].first > points[k - 1].first)) throw ModelError("drift abscissae must increase");
    DriftFunction d;
    d.v = points.back().first;
    d.a = [pts = std::move(points)](double j) {
        if (j <= pts.front().first) return pts.front().second;
        if (j >= pts.back().first) return pts.back().second;
        const auto it = std::upper_bound(pts.begin(), pts.end(), j,
                                         [](double x, const auto& p) { return x < p.first; });
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        return y0 + (j - x0) * (y1 - y0) / (x1 - x0);
    };
    return d;
}

DriftFunction parse_drift_csv(std::string_view text) {
    std::vector<std::pair<double, double>> pts;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto comma = line.find(',');
        double x = 0.0, y = 0.0;
        const auto parse = [](std::string_view s, double& out) {
            while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
            while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
            const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
            return r.ec == std::errc{} && r.ptr == s.data() + s.size();
        };
        const std::string_view sv(line);
        if (comma == std::string::npos || !parse(sv.substr(0, comma), x) || !parse(sv.substr(comma + 1), y)) {
            if (pts.empty() && line_no == 1) continue;  // header
            throw ModelError("drift CSV line " + std::to_string(line_no) + " is not 'J,A'");
        }
        pts.emplace_back(x, y);
    }
    return tabulated_drift(std::move(pts));
}

DriftFunction drift_from_birth_death(double lambda, const FescCharacteristic& c, double v) {
    if (!(lambda > 0.0)) throw ModelError("arrival rate must be positive");
    if (c.rates.empty()) throw ModelError("empty FESC characteristic");
    DriftFunction d;
    d.v = v;
    d.w = c.m_max();
    d.a = [lambda, rates = c.rates](double j) {
        const double mu = lerp_table(rates, j);
        return (lambda - mu) / (lambda + mu);
    };
    return d;
}

double TerminalModel::throughput(double n) const { return lerp_table(t, n); }

std::vector<std::string> TerminalModel::diagnostics() const {
    std::vector<std::string> out;
    if (m < 1) out.emplace_back("M must be at least 1");
    if (!(z > 0.0) || !std::isfinite(z)) out.emplace_back("Z must be positive");
    if (t.empty()) out.emplace_back("throughput characteristic is empty");
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!(t[k] > 0.0) || !std::isfinite(t[k]))
            out.push_back("T(" + std::to_string(k + 1) + ") must be positive");
        else if (k > 0 && t[k] < t[k - 1])
            out.push_back("T decreases at N=" + std::to_string(k + 1));
    }
    return out;
}

void TerminalModel::validate() const {
    const auto d = diagnostics();
    if (!d.empty()) throw ModelError(d.front());
}

Intersection terminal_intersection(const TerminalModel& tm, double tol) {
    tm.validate();
    const double m = tm.m;
    const auto f = [&](double n) { return tm.throughput(n) - (m - n) / tm.z; };
    Intersection r;
    double lo = 0.0, hi = m;
    double f_lo = f(lo);
    if (f_lo >= 0.0) {
        r.n_star = 0.0;
        r.boundary = f_lo > 0.0;
        return r;
    }
    while (hi - lo > tol * std::max(1.0, m)) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = f(mid);
        ++r.iterations;
        if (f_mid == 0.0) {
            lo = hi = mid;
            break;
        }
        if (f_mid < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    r.n_star = 0.5 * (lo + hi);
    return r;
}

TerminalBalance exact_terminal_balance(const TerminalModel& tm) {
    tm.validate();
    const auto m = static_cast<std::size_t>(tm.m);
    TerminalBalance b;
    b.p.assign(m + 1, 0.0);
    b.p[0] = 1.0;
    for (std::size_t n = 1; n <= m; ++n)
        b.p[n] = b.p[n - 1] * (static_cast<double>(m - n + 1) / tm.z) / tm.throughput(static_cast<double>(n));
    double sum = 0.0;
    for (double x : b.p) sum += x;
    for (std::size_t n = 0; n <= m; ++n) {
        b.p[n] /= sum;
        b.n_bar += static_cast<double>(n) * b.p[n];
        if (n > 0) b.throughput += b.p[n] * tm.throughput(static_cast<double>(n));
    }
    return b;
}

double balance_residual(const TerminalModel& tm, const std::vector<double>& p) {
    const auto m = static_cast<std::size_t>(tm.m);
    if (p.size() != m + 1) throw ModelError("probability vector has the wrong length");
    double worst = 0.0;
    for (std::size_t n = 1; n <= m; ++n) {
        const double up = static_cast<double>(m - n + 1) / tm.z * p[n - 1];
        const double down = tm.throughput(static_cast<double>(n)) * p[n];
        worst = std::max(worst, std::abs(up - down));
    }
    return worst;
}

}  // namespace hiermodel
