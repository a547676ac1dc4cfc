#pragma once

#include <complex>
#include <concepts>
#include <type_traits>

#include <Eigen/Core>

namespace dgn {

using Index = Eigen::Index;
using Complex = std::complex<double>;

template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using RealVector = Vector<double>;
using RealMatrix = Matrix<double>;
using ComplexVector = Vector<Complex>;
using ComplexMatrix = Matrix<Complex>;

template <class S>
concept Field = std::same_as<S, double> || std::same_as<S, Complex>;

template <class S>
inline constexpr bool is_complex_v = std::same_as<S, Complex>;

/// Real part of the conjugated inner product <a, b> = Re(a^H b).
///
/// This is the inner product of C^n viewed as R^{2n}, so gradients of real
/// functions of complex vectors are taken with respect to it throughout.
template <class DerivedA, class DerivedB>
double real_inner(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    return std::real(a.dot(b));
}

}  // namespace dgn
