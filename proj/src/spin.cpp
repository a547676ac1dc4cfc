#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "dgn/error.hpp"
#include "dgn/problems.hpp"

namespace dgn {

namespace {

// Eigenvalues closer than this (relative to the spectral scale) form a cluster.
constexpr double kClusterTolerance = 1e-10;
// A basis matrix restricted to a cluster must be this close to a multiple of
// the identity (relative to its own size) for the derivative to be defined.
constexpr double kClusterDerivativeTolerance = 1e-8;

RealMatrix assemble(const std::vector<RealMatrix>& basis, const RealMatrix& a0, const RealVector& x) {
    RealMatrix a = a0;
    for (std::size_t j = 0; j < basis.size(); ++j) a += x(static_cast<Index>(j)) * basis[j];
    return a;
}

void require_symmetric(const RealMatrix& m, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InvalidInputError(std::string(what) + " must be symmetric");
    }
}

}  // namespace

StevensOperators stevens_operators(double spin) {
    const double twice = 2.0 * spin;
    if (!(spin >= 1.0) || std::abs(twice - std::round(twice)) > 1e-12) {
        throw InvalidInputError("stevens_operators: spin must be a half-integer or integer >= 1");
    }
    const Index dim = static_cast<Index>(std::lround(twice)) + 1;
    StevensOperators ops;
    ops.spin = spin;
    ops.dim = dim;
    ops.sz = RealMatrix::Zero(dim, dim);
    ops.s_plus = RealMatrix::Zero(dim, dim);
    for (Index i = 0; i < dim; ++i) {
        const double k = static_cast<double>(i + 1);
        ops.sz(i, i) = spin + 1.0 - k;
        if (i + 1 < dim) ops.s_plus(i, i + 1) = std::sqrt(k * (twice + 1.0 - k));
    }
    ops.s_minus = ops.s_plus.transpose();

    const RealMatrix id = RealMatrix::Identity(dim, dim);
    const RealMatrix x = spin * (spin + 1.0) * id;
    const RealMatrix sz2 = ops.sz * ops.sz;
    const RealMatrix sp2 = ops.s_plus * ops.s_plus;
    const RealMatrix sm2 = ops.s_minus * ops.s_minus;

    ops.o20 = 3.0 * sz2 - x;
    ops.o22 = 0.5 * (sp2 + sm2);
    ops.o40 = 35.0 * sz2 * sz2 - (30.0 * x - 25.0 * id) * sz2 + (3.0 * x * x - 6.0 * x);
    ops.o44 = 0.5 * (sp2 * sp2 + sm2 * sm2);
    return ops;
}

Problem<double> iep_problem(std::vector<RealMatrix> basis, RealMatrix a0, RealVector targets) {
    if (basis.empty()) throw InvalidInputError("iep_problem: basis must not be empty");
    const Index n = a0.rows();
    if (a0.cols() != n) throw ShapeError("iep_problem: A0 must be square");
    require_symmetric(a0, "iep_problem: A0");
    for (const auto& b : basis) {
        if (b.rows() != n || b.cols() != n) throw ShapeError("iep_problem: basis matrices must match A0");
        require_symmetric(b, "iep_problem: basis matrix");
    }
    if (targets.size() != n) throw ShapeError("iep_problem: need one target per eigenvalue");
    for (Index i = 1; i < n; ++i) {
        if (targets(i) < targets(i - 1)) throw InvalidInputError("iep_problem: targets must be sorted ascending");
    }

    const auto shared_basis = std::make_shared<const std::vector<RealMatrix>>(std::move(basis));
    const auto shared_a0 = std::make_shared<const RealMatrix>(std::move(a0));
    const Index num_params = static_cast<Index>(shared_basis->size());

    Problem<double> p;
    p.name = "iep";
    p.num_params = num_params;
    p.num_residuals = n;
    p.residual = [=](const RealVector& x) {
        if (x.size() != num_params) throw ShapeError("iep: wrong number of parameters");
        Eigen::SelfAdjointEigenSolver<RealMatrix> eig(assemble(*shared_basis, *shared_a0, x), Eigen::EigenvaluesOnly);
        return RealVector(eig.eigenvalues() - targets);
    };
    p.jacobian = [=](const RealVector& x) {
        if (x.size() != num_params) throw ShapeError("iep: wrong number of parameters");
        Eigen::SelfAdjointEigenSolver<RealMatrix> eig(assemble(*shared_basis, *shared_a0, x));
        const RealVector& lambda = eig.eigenvalues();
        const RealMatrix& v = eig.eigenvectors();
        const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());

        RealMatrix jac(n, num_params);
        Index start = 0;
        while (start < n) {
            Index stop = start + 1;
            while (stop < n && lambda(stop) - lambda(stop - 1) <= kClusterTolerance * scale) ++stop;
            const Index size = stop - start;
            const auto block = v.middleCols(start, size);
            for (Index j = 0; j < num_params; ++j) {
                const RealMatrix& a = (*shared_basis)[static_cast<std::size_t>(j)];
                const RealMatrix restricted = block.transpose() * a * block;
                const double mean = restricted.trace() / static_cast<double>(size);
                if (size > 1) {
                    const double spread =
                        (restricted - mean * RealMatrix::Identity(size, size)).cwiseAbs().maxCoeff();
                    if (spread > kClusterDerivativeTolerance * std::max(1.0, a.cwiseAbs().maxCoeff())) {
                        throw DegenerateEigenvalueError("iep: eigenvalue " + std::to_string(start) +
                                                        " is repeated and its derivative is not defined");
                    }
                }
                jac.block(start, j, size, 1).setConstant(mean);
            }
            start = stop;
        }
        return jac;
    };
    return p;
}

RealVector mn12_default_parameters() {
    RealVector x(4);
    x << -0.05, -1e-5, 1e-3, 1e-5;
    return x;
}

SpinSystem mn12_system(const RealVector& planted) {
    if (planted.size() != 4) throw ShapeError("mn12: expected parameters (B20, B40, B22, B44)");
    SpinSystem system;
    system.operators = stevens_operators(10.0);
    const auto& ops = system.operators;
    system.basis = {ops.o20, ops.o40, ops.o22, ops.o44};
    const RealMatrix a = assemble(system.basis, RealMatrix::Zero(ops.dim, ops.dim), planted);
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(a, Eigen::EigenvaluesOnly);
    system.targets = eig.eigenvalues();
    return system;
}

Problem<double> mn12_problem(const RealVector& planted) {
    SpinSystem system = mn12_system(planted);
    const Index dim = system.operators.dim;
    Problem<double> p = iep_problem(std::move(system.basis), RealMatrix::Zero(dim, dim), std::move(system.targets));
    p.name = "mn12";
    return p;
}

RealVector mn12_isospectral_partner(const RealVector& x) {
    if (x.size() != 4) throw ShapeError("mn12: expected parameters (B20, B40, B22, B44)");
    RealVector partner = x;
    partner(kMn12B22) = -partner(kMn12B22);
    return partner;
}

}  // namespace dgn
