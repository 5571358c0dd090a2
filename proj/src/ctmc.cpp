#include "hiermodel/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hiermodel/errors.hpp"

namespace hiermodel {

Ctmc::Ctmc(std::size_t n_states, std::span<const Transition> transitions,
           std::vector<std::string> labels)
    : n_(n_states), out_rate_(n_states, 0.0), labels_(std::move(labels)) {
    if (n_ == 0) throw ModelError("CTMC needs at least one state");
    if (!labels_.empty() && labels_.size() != n_) throw ModelError("label count differs from state count");

    std::map<std::pair<std::size_t, std::size_t>, double> merged;
    for (const auto& t : transitions) {
        if (t.from >= n_ || t.to >= n_)
            throw ModelError("transition " + std::to_string(t.from) + "->" + std::to_string(t.to) +
                             " outside a " + std::to_string(n_) + "-state chain");
        if (t.from == t.to) throw ModelError("diagonal entry given for state " + std::to_string(t.from));
        if (!(t.rate >= 0.0) || !std::isfinite(t.rate))
            throw ModelError("negative or non-finite rate on " + std::to_string(t.from) + "->" +
                             std::to_string(t.to));
        if (t.rate > 0.0) merged[{t.from, t.to}] += t.rate;
    }

    row_ptr_.assign(n_ + 1, 0);
    col_ptr_.assign(n_ + 1, 0);
    for (const auto& [key, rate] : merged) {
        ++row_ptr_[key.first + 1];
        ++col_ptr_[key.second + 1];
        out_rate_[key.first] += rate;
    }
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
    std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());
    row_entries_.resize(merged.size());
    col_entries_.resize(merged.size());
    auto row_fill = row_ptr_;
    auto col_fill = col_ptr_;
    for (const auto& [key, rate] : merged) {
        row_entries_[row_fill[key.first]++] = Entry{key.second, rate};
        col_entries_[col_fill[key.second]++] = Entry{key.first, rate};
    }
}

double Ctmc::max_out_rate() const { return *std::max_element(out_rate_.begin(), out_rate_.end()); }

std::vector<Transition> Ctmc::transitions() const {
    std::vector<Transition> t;
    t.reserve(row_entries_.size());
    for (std::size_t i = 0; i < n_; ++i)
        for (const auto& e : row(i)) t.push_back({i, e.index, e.rate});
    return t;
}

Ctmc Ctmc::scaled(double factor) const {
    if (!(factor > 0.0)) throw ModelError("scale factor must be positive");
    auto t = transitions();
    for (auto& e : t) e.rate *= factor;
    return Ctmc(n_, t, labels_);
}

std::vector<std::vector<std::size_t>> strongly_connected_components(const Ctmc& c) {
    // Iterative Tarjan.
    const std::size_t n = c.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> components;
    std::size_t counter = 0;

    struct Frame {
        std::size_t v;
        std::size_t next_edge;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& f = call.back();
            const auto edges = c.row(f.v);
            if (f.next_edge < edges.size()) {
                const std::size_t w = edges[f.next_edge++].index;
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            const std::size_t v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            if (low[v] == index[v]) {
                std::vector<std::size_t> comp;
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                components.push_back(std::move(comp));
            }
        }
    }
    return components;
}

void require_irreducible(const Ctmc& c) {
    const auto comps = strongly_connected_components(c);
    if (comps.size() == 1) return;
    std::ostringstream msg;
    msg << "chain is reducible: " << comps.size() << " strongly connected components";
    std::size_t shown = 0;
    for (const auto& comp : comps) {
        if (++shown > 8) {
            msg << " ...";
            break;
        }
        msg << " {";
        for (std::size_t k = 0; k < comp.size() && k < 8; ++k) msg << (k ? "," : "") << comp[k];
        if (comp.size() > 8) msg << ",...";
        msg << "}";
    }
    throw ModelError(msg.str());
}

double stationary_residual(const Ctmc& c, std::span<const double> pi) {
    double worst = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        double flow = -pi[j] * c.out_rate(j);
        for (const auto& e : c.column(j)) flow += pi[e.index] * e.rate;
        worst = std::max(worst, std::abs(flow));
    }
    return worst;
}

namespace {

void normalize(std::vector<double>& pi) {
    const double s = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (double& x : pi) x /= s;
}

std::vector<double> starting_vector(const Ctmc& c, const IterativeOptions& opts) {
    if (opts.initial.empty()) return std::vector<double>(c.size(), 1.0 / static_cast<double>(c.size()));
    if (opts.initial.size() != c.size()) throw ModelError("initial vector has the wrong length");
    auto pi = opts.initial;
    normalize(pi);
    return pi;
}

void check_iterative_options(const IterativeOptions& opts) {
    if (!(opts.tol > 0.0)) throw ModelError("tolerance must be positive");
    if (opts.max_iter == 0) throw ModelError("max_iter must be positive");
}

}  // namespace

SteadyState solve_direct(const Ctmc& c, std::size_t budget) {
    const std::size_t n = c.size();
    if (n > budget)
        throw ModelError("chain of " + std::to_string(n) + " states exceeds the direct-solve budget of " +
                         std::to_string(budget));
    require_irreducible(c);

    SteadyState s;
    if (n == 1) {
        s.pi = {1.0};
        return s;
    }
    // A = Q^T; row n-1 becomes the normalization equation.
    using Index = Eigen::Index;
    std::vector<Eigen::Triplet<double>> trip;
    const std::size_t last = n - 1;
    for (std::size_t j = 0; j < last; ++j) {
        trip.emplace_back(static_cast<Index>(j), static_cast<Index>(j), -c.out_rate(j));
        for (const auto& e : c.column(j))
            trip.emplace_back(static_cast<Index>(j), static_cast<Index>(e.index), e.rate);
    }
    for (std::size_t i = 0; i < n; ++i)
        trip.emplace_back(static_cast<Index>(last), static_cast<Index>(i), 1.0);
    Eigen::SparseMatrix<double> a(static_cast<Index>(n), static_cast<Index>(n));
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw ModelError("sparse LU factorization failed: " + lu.lastErrorMessage());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Index>(n));
    rhs(static_cast<Index>(last)) = 1.0;
    const Eigen::VectorXd x = lu.solve(rhs);

    s.pi.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.pi[i] = std::max(0.0, x(static_cast<Index>(i)));
    normalize(s.pi);
    s.residual = stationary_residual(c, s.pi);
    s.iterations = 1;
    return s;
}

SteadyState power_iterate(const Ctmc& c, const IterativeOptions& opts) {
    check_iterative_options(opts);
    require_irreducible(c);
    const double bound = c.max_out_rate();
    const double scale = opts.c_scale.value_or(bound > 0.0 ? 0.5 / bound : 1.0);
    if (!(scale > 0.0) || (bound > 0.0 && !(scale < 1.0 / bound)))
        throw ModelError("c_scale must lie in (0, 1/max|q_ii|)");

    const std::size_t n = c.size();
    auto pi = starting_vector(c, opts);
    std::vector<double> next(n);
    double change = 0.0;
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        change = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double flow = -pi[j] * c.out_rate(j);
            for (const auto& e : c.column(j)) flow += pi[e.index] * e.rate;
            next[j] = pi[j] + scale * flow;
            change = std::max(change, std::abs(next[j] - pi[j]));
        }
        pi.swap(next);
        if (change < opts.tol) {
            normalize(pi);
            return SteadyState{pi, stationary_residual(c, pi), it};
        }
    }
    normalize(pi);
    throw ConvergenceError("power iteration did not converge in " + std::to_string(opts.max_iter) +
                               " iterations",
                           stationary_residual(c, pi), opts.max_iter);
}

SteadyState gauss_seidel(const Ctmc& c, const IterativeOptions& opts) {
    check_iterative_options(opts);
    require_irreducible(c);
    const std::size_t n = c.size();
    auto pi = starting_vector(c, opts);
    if (n == 1) return SteadyState{pi, 0.0, 1};
    std::vector<double> prev(n);
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        prev = pi;
        for (std::size_t j = 0; j < n; ++j) {
            double inflow = 0.0;
            for (const auto& e : c.column(j)) inflow += pi[e.index] * e.rate;
            pi[j] = inflow / c.out_rate(j);
        }
        normalize(pi);
        double change = 0.0;
        for (std::size_t j = 0; j < n; ++j) change = std::max(change, std::abs(pi[j] - prev[j]));
        if (change < opts.tol) return SteadyState{pi, stationary_residual(c, pi), it};
    }
    throw ConvergenceError("Gauss-Seidel did not converge in " + std::to_string(opts.max_iter) +
                               " iterations",
                           stationary_residual(c, pi), opts.max_iter);
}

}  // namespace hiermodel
