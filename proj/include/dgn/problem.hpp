#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dgn/numerics.hpp"
#include "dgn/types.hpp"

namespace dgn {

enum class ScalarField { Real, Complex };

/// Distance used by deflation operators, together with its gradient in the
/// first argument (w.r.t. the real inner product Re<a, b>).
template <Field S>
struct Metric {
    std::function<double(const Vector<S>&, const Vector<S>&)> distance;
    std::function<Vector<S>(const Vector<S>&, const Vector<S>&)> gradient;

    static Metric euclidean() {
        return Metric{
            [](const Vector<S>& x, const Vector<S>& y) { return (x - y).norm(); },
            [](const Vector<S>& x, const Vector<S>& y) -> Vector<S> {
                const double d = (x - y).norm();
                if (d == 0.0) return Vector<S>::Zero(x.size());
                return (x - y) / d;
            }};
    }
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Nonlinear least-squares problem f(x) = 1/2 ||r(x)||^2 with r : S^l -> S^m.
template <Field S>
struct Problem {
    std::string name;
    Index num_params = 0;
    Index num_residuals = 0;
    std::function<Vector<S>(const Vector<S>&)> residual;
    std::function<Matrix<S>(const Vector<S>&)> jacobian;
    /// Hessians of the individual residual components; empty when unavailable.
    std::function<std::vector<Matrix<S>>(const Vector<S>&)> residual_hessians;
    Metric<S> metric = Metric<S>::euclidean();
    /// Optional sampling box, one interval per parameter.
    std::vector<Interval> bounds;

    static constexpr ScalarField field = is_complex_v<S> ? ScalarField::Complex : ScalarField::Real;

    bool has_hessians() const { return static_cast<bool>(residual_hessians); }
    bool is_square() const { return num_params == num_residuals; }

    double objective(const Vector<S>& x) const { return 0.5 * residual(x).squaredNorm(); }
    Vector<S> gradient(const Vector<S>& x) const { return jacobian(x).adjoint() * residual(x); }
};

template <Field S>
Matrix<S> fd_jacobian(const Problem<S>& problem, const Vector<S>& x, double h) {
    return fd_jacobian<S>(problem.residual, x, h);
}

template <Field S>
Matrix<S> fd_jacobian(const Problem<S>& problem, const Vector<S>& x) {
    return fd_jacobian<S>(problem.residual, x, default_fd_step(x));
}

}  // namespace dgn
