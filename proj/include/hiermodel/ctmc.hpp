#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hiermodel {

struct Transition {
    std::size_t from = 0;
    std::size_t to = 0;
    double rate = 0.0;
};

/// Finite CTMC with generator Q: off-diagonal rates are stored sparsely in both
/// row and column order, the diagonal is implied (q_ii = -sum of row i).
/// Immutable after construction.
class Ctmc {
public:
    /// Duplicate (from, to) entries are summed; zero rates are dropped.
    /// Throws ModelError on negative rates, out-of-range indices or diagonal entries.
    Ctmc(std::size_t n_states, std::span<const Transition> transitions,
         std::vector<std::string> labels = {});

    std::size_t size() const { return n_; }
    /// -q_ii
    double out_rate(std::size_t i) const { return out_rate_[i]; }
    double max_out_rate() const;
    const std::vector<std::string>& labels() const { return labels_; }

    struct Entry {
        std::size_t index;
        double rate;
    };
    /// Off-diagonal entries of row i (targets of state i).
    std::span<const Entry> row(std::size_t i) const {
        return {row_entries_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }
    /// Off-diagonal entries of column j (sources into state j).
    std::span<const Entry> column(std::size_t j) const {
        return {col_entries_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
    }

    /// Returns the chain with every rate multiplied by `factor`.
    Ctmc scaled(double factor) const;
    std::vector<Transition> transitions() const;

private:
    std::size_t n_;
    std::vector<std::size_t> row_ptr_, col_ptr_;
    std::vector<Entry> row_entries_, col_entries_;
    std::vector<double> out_rate_;
    std::vector<std::string> labels_;
};

struct SteadyState {
    std::vector<double> pi;
    double residual = 0.0;  // max_j |(pi Q)_j|
    std::size_t iterations = 0;
};

/// Strongly connected components, each sorted; components in discovery order.
std::vector<std::vector<std::size_t>> strongly_connected_components(const Ctmc& c);

/// Throws ModelError naming the components when the chain is reducible.
void require_irreducible(const Ctmc& c);

/// max_j |(pi Q)_j|
double stationary_residual(const Ctmc& c, std::span<const double> pi);

inline constexpr std::size_t default_direct_budget = 5000;

/// pi Q = 0 with the last balance equation replaced by sum(pi) = 1, sparse LU.
SteadyState solve_direct(const Ctmc& c, std::size_t budget = default_direct_budget);

struct IterativeOptions {
    double tol = 1e-12;
    std::size_t max_iter = 1'000'000;
    /// Power iteration scale; defaults to 0.5 / max_i |q_ii|.
    std::optional<double> c_scale;
    /// Starting vector; defaults to uniform.
    std::vector<double> initial;
};

/// pi <- pi (c Q + I) until the max-norm change drops below tol.
SteadyState power_iterate(const Ctmc& c, const IterativeOptions& opts = {});

/// In-place Gauss-Seidel sweeps on pi Q = 0, renormalized after each sweep.
SteadyState gauss_seidel(const Ctmc& c, const IterativeOptions& opts = {});

}  // namespace hiermodel
