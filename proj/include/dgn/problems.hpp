#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "dgn/problem.hpp"
#include "dgn/types.hpp"

namespace dgn {

// ---------------------------------------------------------------------------
// Two-dimensional test problems

/// r(x, y) = (x^2 + y - 11, x + y^2 - 7); four real roots.
Problem<double> himmelblau();

/// Trigonometric product problem with 42 local minima and 143 stationary points
/// (for a = 10):
///
///   r1 = a s prod_{k=1..3} (1 - s^2 / (k pi)^2),          s = x + y
///   r2 = a   prod_{k=1..3} (1 - t^2 / ((k - 1/2) pi)^2),  t = x - y
///   r3 = a + 0.01 (x^2 + y^2)
///
/// r1 and r2 are the truncated product expansions of a sin(s) and a cos(t).
Problem<double> ftrig(double a = 10.0);

// ---------------------------------------------------------------------------
// Fourier extension on [0, 1] with period 2

/// Coefficients c_j, j = -n..n (stored at index j + n), of u(x) = sum_j c_j e^{i j pi x},
/// sampled on the nodes x_k = k / m, k = 0..m.
class FourierExtensionGrid {
public:
    FourierExtensionGrid(Index n, Index m);

    Index max_frequency() const { return n_; }
    Index num_coefficients() const { return 2 * n_ + 1; }
    Index oversampling() const { return m_; }
    Index num_nodes() const { return m_ + 1; }
    double node(Index k) const { return static_cast<double>(k) / static_cast<double>(m_); }
    Index frequency(Index idx) const { return idx - n_; }

    /// Values u(x_k); uses a zero-padded length-2m FFT when m + 1 >= N.
    ComplexVector evaluate(const ComplexVector& c) const;
    /// Direct O(m N) summation.
    ComplexVector evaluate_direct(const ComplexVector& c) const;
    /// Adjoint of evaluate: (E^H w)_j = sum_k conj(e^{i j pi x_k}) w_k.
    ComplexVector adjoint(const ComplexVector& w) const;
    bool uses_fast_transform() const { return num_nodes() >= num_coefficients(); }

    /// E_kj = e^{i j pi x_k}, (m + 1) x N.
    const ComplexMatrix& collocation_matrix() const { return *collocation_; }

    /// Coefficients whose grid values best fit the given samples (minimum-norm fit).
    ComplexVector fit(const ComplexVector& samples) const;

private:
    Index n_;
    Index m_;
    std::shared_ptr<const ComplexMatrix> collocation_;
};

/// sqrt(1/(m+1) sum_k |u(x_k)|^2), the 2-norm of the grid values.
double fe_norm(const ComplexVector& c, const FourierExtensionGrid& grid);

/// Deflation metric d(c, c') = fe_norm(c - c') with its chain-rule gradient.
Metric<Complex> fe_metric(const FourierExtensionGrid& grid);

/// u'' + 3 exp(u) = 0, u(0) = u(1) = 0, collocated at m + 1 nodes plus two boundary rows.
Problem<Complex> bratu_problem(Index n = 100, Index m = 400);

/// 0.05 u'' + 8 x (1 - x) u + u^2 = 1, u(0) = u(1) = 0, same discretization as bratu_problem.
Problem<Complex> carrier_problem(Index n = 100, Index m = 400);

/// Coefficients of the named initial function: "zero" or "x(1-x)".
ComplexVector fe_initial_guess(const FourierExtensionGrid& grid, std::string_view preset);

// ---------------------------------------------------------------------------
// Spin Hamiltonians and inverse eigenvalue problems

struct StevensOperators {
    double spin = 0.0;
    Index dim = 0;
    RealMatrix sz;
    RealMatrix s_plus;
    RealMatrix s_minus;
    RealMatrix o20;
    RealMatrix o22;
    RealMatrix o40;
    RealMatrix o44;
};

/// Spin matrices and the four Stevens operators on the (2S+1)-dimensional space.
/// Throws InvalidInputError unless 2S is a positive integer with S >= 1.
StevensOperators stevens_operators(double spin);

struct SpinSystem {
    StevensOperators operators;
    /// Basis in parameter order (B20, B40, B22, B44).
    std::vector<RealMatrix> basis;
    RealVector targets;
};

/// r_i(x) = lambda_i(A0 + sum_j x_j A_j) - target_i with ascending eigenvalues.
///
/// The Jacobian uses first-order perturbation, d lambda_i / d x_j = v_i^T A_j v_i.
/// Clusters of eigenvalues closer than 1e-10 (relative) are accepted only when
/// every basis matrix acts as a multiple of the identity on the cluster's
/// eigenspace (then all derivatives agree); otherwise the evaluation throws
/// DegenerateEigenvalueError.
Problem<double> iep_problem(std::vector<RealMatrix> basis, RealMatrix a0, RealVector targets);

/// Parameter order of the Mn12 model.
inline constexpr int kMn12B20 = 0;
inline constexpr int kMn12B40 = 1;
inline constexpr int kMn12B22 = 2;
inline constexpr int kMn12B44 = 3;

/// Default planted parameters (B20, B40, B22, B44), chosen only to give a well-separated spectrum.
RealVector mn12_default_parameters();

/// Spin-10 system with basis (O20, O40, O22, O44) and targets = spectrum at `planted`.
SpinSystem mn12_system(const RealVector& planted);
Problem<double> mn12_problem(const RealVector& planted);

/// Partner parameters with the same spectrum: the B22 coefficient flips sign under
/// conjugation by diag((-1)^floor(k/2)), which leaves the Delta m = 0, 4 couplings unchanged.
RealVector mn12_isospectral_partner(const RealVector& x);

}  // namespace dgn
