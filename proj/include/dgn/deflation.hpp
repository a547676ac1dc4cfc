#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "dgn/problem.hpp"
#include "dgn/types.hpp"

namespace dgn {

enum class DeflationVariant {
    MultiShift,   ///< prod_i (sigma + d_i^-theta)
    SingleShift,  ///< sigma + prod_i d_i^-theta
    Exponential,  ///< prod_i exp(1 / d_i)
};

std::string_view to_string(DeflationVariant variant);
DeflationVariant deflation_variant_from_string(std::string_view name);

struct DeflationConfig {
    double theta = 2.0;
    double sigma = 1.0;
    DeflationVariant variant = DeflationVariant::MultiShift;

    void validate() const;
};

/// Immutable set of deflated points together with the operator acting on them.
///
/// Solvers only need grad_eta(x) = mu(x)^-1 grad mu(x); mu itself is exposed
/// for diagnostics and tests.
template <Field S>
class DeflationState {
public:
    explicit DeflationState(DeflationConfig config = {}, Metric<S> metric = Metric<S>::euclidean());

    const DeflationConfig& config() const { return config_; }
    const Metric<S>& metric() const { return metric_; }
    const std::vector<Vector<S>>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    /// Returns a copy with y appended. Repeated points are allowed.
    [[nodiscard]] DeflationState with_point(Vector<S> y) const;

    double mu(const Vector<S>& x) const;
    double log_mu(const Vector<S>& x) const;
    Vector<S> grad_eta(const Vector<S>& x) const;

private:
    /// Distances to every point; throws AtDeflatedPointError when x sits on one.
    std::vector<double> distances(const Vector<S>& x) const;

    DeflationConfig config_;
    Metric<S> metric_;
    std::vector<Vector<S>> points_;
};

template <Field S>
double mu_value(const DeflationState<S>& state, const Vector<S>& x) {
    return state.mu(x);
}

template <Field S>
Vector<S> grad_eta(const DeflationState<S>& state, const Vector<S>& x) {
    return state.grad_eta(x);
}

template <Field S>
DeflationState<S> add_deflation_point(const DeflationState<S>& state, Vector<S> y) {
    return state.with_point(std::move(y));
}

/// Uniform lattice on [x_lo, x_hi] x [y_lo, y_hi], row-major in y then x.
struct Grid2D {
    double x_lo = -5.0;
    double x_hi = 5.0;
    double y_lo = -5.0;
    double y_hi = 5.0;
    Index nx = 101;
    Index ny = 101;

    double x_at(Index i) const;
    double y_at(Index j) const;
    void validate() const;
};

struct BetaField {
    Grid2D grid;
    /// values[j * nx + i] is beta at (x_at(i), y_at(j)); nullopt where the
    /// undeflated step or grad_eta could not be evaluated.
    std::vector<std::optional<double>> values;

    std::optional<double> at(Index i, Index j) const { return values[static_cast<std::size_t>(j * grid.nx + i)]; }
};

/// beta(x) = 1 - <grad_eta(x), p(x)> with p the undeflated Gauss-Newton step.
BetaField beta_field(const Problem<double>& problem, const DeflationState<double>& state, const Grid2D& grid);

}  // namespace dgn
