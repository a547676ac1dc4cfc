#pragma once

#include <cmath>
#include <utility>

#include <Eigen/QR>

#include "dgn/error.hpp"
#include "dgn/types.hpp"

namespace dgn {

/// Relative pivot size below which a triangular factor is treated as singular.
inline constexpr double kRankTolerance = 1e-12;

/// Column-pivoted Householder QR of an m x l matrix with m >= l.
///
/// The factorization satisfies J * P = Q * R with Q having orthonormal columns.
/// It is computed once per iterate and reused for the least-squares step,
/// the projector onto range(J)^perp and the normal-matrix inverse, so every
/// action below costs O(m l) once the factors exist.
template <Field S>
class QrFactors {
public:
    using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

    explicit QrFactors(const Matrix<S>& a, double rank_tolerance = kRankTolerance);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }

    /// Number of pivots with |R_ii| >= rank_tolerance * max |R_jj|.
    Index rank() const { return rank_; }
    bool full_rank() const { return rank_ == cols_; }

    /// Thin orthonormal factor, phases chosen so that diag(R) is real and nonnegative.
    Matrix<S> thin_q() const;
    /// Upper-triangular l x l factor with real nonnegative diagonal.
    Matrix<S> r() const;
    const Permutation& permutation() const { return qr_.colsPermutation(); }

    /// Q_thin * v for v of length l.
    Vector<S> apply_q(const Vector<S>& v) const;
    /// Q_thin^H * b for b of length m.
    Vector<S> apply_q_adjoint(const Vector<S>& b) const;

    /// argmin ||J x - b|| for full-rank J.
    Vector<S> solve_least_squares(const Vector<S>& b) const;

    /// Minimum-norm least-squares solution; when rank deficient, pivots below
    /// l * machine epsilon relative to the largest are truncated.
    Vector<S> solve_min_norm(const Vector<S>& b) const;

    /// R^{-1} y and R^{-H} y in the permuted column ordering.
    Vector<S> solve_r(const Vector<S>& y) const;
    Vector<S> solve_r_adjoint(const Vector<S>& y) const;

    /// Throws RankDeficientError naming `what` unless full_rank().
    void require_full_rank(const char* what) const;

private:
    Eigen::ColPivHouseholderQR<Matrix<S>> qr_;
    Index rows_ = 0;
    Index cols_ = 0;
    Index rank_ = 0;
};

/// Thin QR of J; throws ShapeError when J has more columns than rows.
template <Field S>
QrFactors<S> qr_factorize(const Matrix<S>& j);

/// Minimum-2-norm minimizer of ||J p - b||.
///
/// Tall systems use the pivoted QR (truncated at working precision when the
/// rank rule flags deficiency); wide ones a complete orthogonal decomposition.
template <Field S>
Vector<S> lsq_min_norm(const Matrix<S>& j, const Vector<S>& b);

/// Same as above, reusing factors already computed for J.
template <Field S>
Vector<S> lsq_min_norm(const QrFactors<S>& factors, const Vector<S>& b);

/// (J^H J)^{-1} v via two triangular solves.
template <Field S>
Vector<S> apply_normal_inverse(const QrFactors<S>& factors, const Vector<S>& v);

/// (I - J J^+) r.
template <Field S>
Vector<S> apply_projector_complement(const QrFactors<S>& factors, const Vector<S>& r);

/// J^{+H} v = Q R^{-H} P^T v.
template <Field S>
Vector<S> apply_pinv_transpose(const QrFactors<S>& factors, const Vector<S>& v);

/// (A + u v^T)^+ u evaluated through the full-rank rank-one pseudoinverse update:
///
///   (beta / omega) A^+ u + (||P u||^2 / omega) (A^T A)^{-1} v,
///   beta = 1 + v^T A^+ u,  omega = ||P u||^2 ||A^{+T} v||^2 + beta^2,  P = I - A A^+.
///
/// Only used for verification; the solvers assemble the same quantities from
/// their own factorization.
RealVector pinv_rank_update_action(const RealMatrix& a, const RealVector& u, const RealVector& v);

/// Default central-difference step 1e-5 * (1 + ||x||_inf).
template <class Derived>
double default_fd_step(const Eigen::MatrixBase<Derived>& x) {
    return 1e-5 * (1.0 + (x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff()));
}

/// Central-difference Jacobian of a residual callable.
///
/// Columns are perturbed along the real axis; for residuals that are
/// holomorphic in complex unknowns this is the complex derivative.
template <Field S, class Residual>
Matrix<S> fd_jacobian(Residual&& residual, const Vector<S>& x, double h) {
    if (!(h > 0.0)) throw InvalidInputError("fd_jacobian: step must be positive");
    Vector<S> xp = x;
    Vector<S> xm = x;
    Matrix<S> jac;
    for (Index j = 0; j < x.size(); ++j) {
        xp(j) = x(j) + h;
        xm(j) = x(j) - h;
        Vector<S> rp = residual(xp);
        Vector<S> rm = residual(xm);
        if (j == 0) jac.resize(rp.size(), x.size());
        jac.col(j) = (rp - rm) / (2.0 * h);
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return jac;
}

}  // namespace dgn
