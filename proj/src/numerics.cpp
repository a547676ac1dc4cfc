#include "dgn/numerics.hpp"

#include <limits>

#include <Eigen/QR>

namespace dgn {

namespace {

template <Field S>
void require_finite(const Matrix<S>& j, const Vector<S>& b, const char* what) {
    if (!j.allFinite() || !b.allFinite()) throw InvalidInputError(std::string(what) + ": non-finite input");
}

template <Field S>
S unit_phase(const S& value) {
    const double mag = std::abs(value);
    if (mag == 0.0) return S(1.0);
    return value / mag;
}

}  // namespace

template <Field S>
QrFactors<S>::QrFactors(const Matrix<S>& a, double rank_tolerance) : rows_(a.rows()), cols_(a.cols()) {
    if (a.rows() < 1 || a.cols() < 1) throw ShapeError("qr_factorize: empty matrix");
    if (a.rows() < a.cols()) throw ShapeError("qr_factorize: matrix has more columns than rows");
    if (!a.allFinite()) throw InvalidInputError("qr_factorize: non-finite input");
    qr_.compute(a);

    const auto& packed = qr_.matrixQR();
    double max_pivot = 0.0;
    for (Index i = 0; i < cols_; ++i) max_pivot = std::max(max_pivot, std::abs(packed(i, i)));
    rank_ = 0;
    if (max_pivot > 0.0) {
        for (Index i = 0; i < cols_; ++i) {
            if (std::abs(packed(i, i)) >= rank_tolerance * max_pivot) ++rank_;
        }
    }
}

template <Field S>
void QrFactors<S>::require_full_rank(const char* what) const {
    if (!full_rank()) {
        throw RankDeficientError(std::string(what) + ": triangular factor is singular to tolerance (rank " +
                                 std::to_string(rank_) + " of " + std::to_string(cols_) + ")");
    }
}

template <Field S>
Matrix<S> QrFactors<S>::thin_q() const {
    Matrix<S> q = qr_.householderQ() * Matrix<S>::Identity(rows_, cols_);
    const auto& packed = qr_.matrixQR();
    for (Index i = 0; i < cols_; ++i) q.col(i) *= unit_phase(packed(i, i));
    return q;
}

template <Field S>
Matrix<S> QrFactors<S>::r() const {
    Matrix<S> r = qr_.matrixQR().topRows(cols_).template triangularView<Eigen::Upper>();
    for (Index i = 0; i < cols_; ++i) {
        const S phase = unit_phase(r(i, i));
        if constexpr (is_complex_v<S>) {
            r.row(i) *= std::conj(phase);
        } else {
            r.row(i) *= phase;
        }
        r(i, i) = std::abs(r(i, i));
    }
    return r;
}

template <Field S>
Vector<S> QrFactors<S>::apply_q(const Vector<S>& v) const {
    if (v.size() != cols_) throw ShapeError("apply_q: expected vector of length l");
    Vector<S> padded = Vector<S>::Zero(rows_);
    padded.head(cols_) = v;
    return qr_.householderQ() * padded;
}

template <Field S>
Vector<S> QrFactors<S>::apply_q_adjoint(const Vector<S>& b) const {
    if (b.size() != rows_) throw ShapeError("apply_q_adjoint: expected vector of length m");
    Vector<S> full = qr_.householderQ().adjoint() * b;
    return full.head(cols_);
}

template <Field S>
Vector<S> QrFactors<S>::solve_r(const Vector<S>& y) const {
    return qr_.matrixQR().topLeftCorner(cols_, cols_).template triangularView<Eigen::Upper>().solve(y);
}

template <Field S>
Vector<S> QrFactors<S>::solve_r_adjoint(const Vector<S>& y) const {
    return qr_.matrixQR().topLeftCorner(cols_, cols_).template triangularView<Eigen::Upper>().adjoint().solve(y);
}

template <Field S>
Vector<S> QrFactors<S>::solve_least_squares(const Vector<S>& b) const {
    require_full_rank("solve_least_squares");
    if (b.size() != rows_) throw ShapeError("solve_least_squares: right-hand side has wrong length");
    return permutation() * solve_r(apply_q_adjoint(b));
}

template <Field S>
Vector<S> QrFactors<S>::solve_min_norm(const Vector<S>& b) const {
    if (b.size() != rows_) throw ShapeError("solve_min_norm: right-hand side has wrong length");
    if (full_rank()) return solve_least_squares(b);
    // Truncate at working precision, like a complete orthogonal decomposition.
    const auto& packed = qr_.matrixQR();
    const double max_pivot = packed.diagonal().cwiseAbs().maxCoeff();
    const double threshold = static_cast<double>(cols_) * std::numeric_limits<double>::epsilon() * max_pivot;
    Index r = 0;
    while (r < cols_ && std::abs(packed(r, r)) > threshold) ++r;
    if (r == 0) return Vector<S>::Zero(cols_);
    // Minimum-norm z with [R11 R12] z = (Q^H b)_{1:r}, through a QR of the r x l block's adjoint.
    const Matrix<S> top = packed.topRows(r).template triangularView<Eigen::Upper>();
    const Eigen::HouseholderQR<Matrix<S>> inner(top.adjoint());
    Vector<S> w = Vector<S>::Zero(cols_);
    w.head(r) = inner.matrixQR().topLeftCorner(r, r).template triangularView<Eigen::Upper>().adjoint().solve(
        apply_q_adjoint(b).head(r));
    return permutation() * Vector<S>(inner.householderQ() * w);
}

template <Field S>
QrFactors<S> qr_factorize(const Matrix<S>& j) {
    return QrFactors<S>(j);
}

template <Field S>
Vector<S> lsq_min_norm(const QrFactors<S>& factors, const Vector<S>& b) {
    if (!b.allFinite()) throw InvalidInputError("lsq_min_norm: non-finite input");
    return factors.solve_min_norm(b);
}

template <Field S>
Vector<S> lsq_min_norm(const Matrix<S>& j, const Vector<S>& b) {
    require_finite(j, b, "lsq_min_norm");
    if (j.rows() < 1 || j.cols() < 1) throw ShapeError("lsq_min_norm: empty matrix");
    if (b.size() != j.rows()) throw ShapeError("lsq_min_norm: right-hand side has wrong length");
    if (j.rows() >= j.cols()) return QrFactors<S>(j).solve_min_norm(b);
    Eigen::CompleteOrthogonalDecomposition<Matrix<S>> cod(j);
    return cod.solve(b);
}

template <Field S>
Vector<S> apply_normal_inverse(const QrFactors<S>& factors, const Vector<S>& v) {
    factors.require_full_rank("apply_normal_inverse");
    if (v.size() != factors.cols()) throw ShapeError("apply_normal_inverse: expected vector of length l");
    // J^H J = P R^H R P^T
    Vector<S> y = factors.permutation().transpose() * v;
    return factors.permutation() * factors.solve_r(factors.solve_r_adjoint(y));
}

template <Field S>
Vector<S> apply_projector_complement(const QrFactors<S>& factors, const Vector<S>& r) {
    if (r.size() != factors.rows()) throw ShapeError("apply_projector_complement: expected vector of length m");
    return r - factors.apply_q(factors.apply_q_adjoint(r));
}

template <Field S>
Vector<S> apply_pinv_transpose(const QrFactors<S>& factors, const Vector<S>& v) {
    factors.require_full_rank("apply_pinv_transpose");
    if (v.size() != factors.cols()) throw ShapeError("apply_pinv_transpose: expected vector of length l");
    return factors.apply_q(factors.solve_r_adjoint(factors.permutation().transpose() * v));
}

RealVector pinv_rank_update_action(const RealMatrix& a, const RealVector& u, const RealVector& v) {
    if (u.size() != a.rows() || v.size() != a.cols()) throw ShapeError("pinv_rank_update_action: dimension mismatch");
    if (!a.allFinite() || !u.allFinite() || !v.allFinite()) {
        throw InvalidInputError("pinv_rank_update_action: non-finite input");
    }
    const QrFactors<double> factors(a);
    const RealVector a_pinv_u = factors.solve_least_squares(u);
    const double pu_sq = apply_projector_complement(factors, u).squaredNorm();
    const double beta = 1.0 + v.dot(a_pinv_u);
    const double omega = pu_sq * apply_pinv_transpose(factors, v).squaredNorm() + beta * beta;
    if (omega == 0.0) throw RankDeficientError("pinv_rank_update_action: updated matrix loses rank (omega = 0)");
    return (beta / omega) * a_pinv_u + (pu_sq / omega) * apply_normal_inverse(factors, v);
}

#define DGN_INSTANTIATE_NUMERICS(S)                                                               \
    template class QrFactors<S>;                                                                  \
    template QrFactors<S> qr_factorize<S>(const Matrix<S>&);                                      \
    template Vector<S> lsq_min_norm<S>(const Matrix<S>&, const Vector<S>&);                       \
    template Vector<S> lsq_min_norm<S>(const QrFactors<S>&, const Vector<S>&);                    \
    template Vector<S> apply_normal_inverse<S>(const QrFactors<S>&, const Vector<S>&);            \
    template Vector<S> apply_projector_complement<S>(const QrFactors<S>&, const Vector<S>&);      \
    template Vector<S> apply_pinv_transpose<S>(const QrFactors<S>&, const Vector<S>&);

DGN_INSTANTIATE_NUMERICS(double)
DGN_INSTANTIATE_NUMERICS(Complex)

#undef DGN_INSTANTIATE_NUMERICS

}  // namespace dgn
