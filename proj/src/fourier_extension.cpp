#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "dgn/error.hpp"
#include "dgn/numerics.hpp"
#include "dgn/problems.hpp"

namespace dgn {

namespace {

Index wrap(Index j, Index period) {
    return ((j % period) + period) % period;
}

enum class BvpKind { Bratu, Carrier };

Problem<Complex> make_bvp(BvpKind kind, Index n, Index m) {
    const auto grid = std::make_shared<const FourierExtensionGrid>(n, m);
    const Index num_coeffs = grid->num_coefficients();
    const Index num_nodes = grid->num_nodes();
    const double scale = 1.0 / std::sqrt(static_cast<double>(num_nodes));
    const double pi2 = std::numbers::pi * std::numbers::pi;

    // Second-derivative symbol -j^2 pi^2, and the same weighted by the u'' coefficient.
    ComplexVector second(num_coeffs);
    for (Index idx = 0; idx < num_coeffs; ++idx) {
        const double j = static_cast<double>(grid->frequency(idx));
        second(idx) = -j * j * pi2;
    }
    const double upp_coeff = kind == BvpKind::Bratu ? 1.0 : 0.05;
    RealVector nodes(num_nodes);
    for (Index k = 0; k < num_nodes; ++k) nodes(k) = grid->node(k);

    const std::string name = kind == BvpKind::Bratu ? "bratu" : "carrier";

    Problem<Complex> p;
    p.name = name;
    p.num_params = num_coeffs;
    p.num_residuals = num_nodes + 2;
    p.metric = fe_metric(*grid);

    p.residual = [=](const ComplexVector& c) {
        if (c.size() != num_coeffs) throw ShapeError(name + ": wrong number of coefficients");
        const ComplexVector u = grid->evaluate(c);
        const ComplexVector upp = grid->evaluate(second.cwiseProduct(c));
        ComplexVector r(num_nodes + 2);
        for (Index k = 0; k < num_nodes; ++k) {
            Complex ode;
            if (kind == BvpKind::Bratu) {
                ode = upp(k) + 3.0 * std::exp(u(k));
            } else {
                const double x = nodes(k);
                ode = upp_coeff * upp(k) + 8.0 * x * (1.0 - x) * u(k) + u(k) * u(k) - 1.0;
            }
            r(k) = scale * ode;
        }
        Complex left = 0.0, right = 0.0;
        for (Index idx = 0; idx < num_coeffs; ++idx) {
            left += c(idx);
            right += (grid->frequency(idx) % 2 == 0 ? 1.0 : -1.0) * c(idx);
        }
        r(num_nodes) = left;
        r(num_nodes + 1) = right;
        return r;
    };

    p.jacobian = [=](const ComplexVector& c) {
        if (c.size() != num_coeffs) throw ShapeError(name + ": wrong number of coefficients");
        const ComplexVector u = grid->evaluate(c);
        // d(ode_k)/d(c_j) = (upp_coeff * second_j + w_k) E_kj
        ComplexVector w(num_nodes);
        for (Index k = 0; k < num_nodes; ++k) {
            if (kind == BvpKind::Bratu) {
                w(k) = 3.0 * std::exp(u(k));
            } else {
                const double x = nodes(k);
                w(k) = 8.0 * x * (1.0 - x) + 2.0 * u(k);
            }
        }
        const ComplexMatrix& e = grid->collocation_matrix();
        ComplexMatrix jac(num_nodes + 2, num_coeffs);
        for (Index idx = 0; idx < num_coeffs; ++idx) {
            jac.col(idx).head(num_nodes) =
                scale * ((upp_coeff * second(idx) + w.array()) * e.col(idx).array()).matrix();
            jac(num_nodes, idx) = 1.0;
            jac(num_nodes + 1, idx) = grid->frequency(idx) % 2 == 0 ? 1.0 : -1.0;
        }
        return jac;
    };
    return p;
}

}  // namespace

FourierExtensionGrid::FourierExtensionGrid(Index n, Index m) : n_(n), m_(m) {
    if (n < 0) throw InvalidInputError("FourierExtensionGrid: n must be nonnegative");
    if (m < 1 || m < 2 * n) throw InvalidInputError("FourierExtensionGrid: need m >= 2n and m >= 1");
    auto e = std::make_shared<ComplexMatrix>(num_nodes(), num_coefficients());
    for (Index k = 0; k < num_nodes(); ++k) {
        for (Index idx = 0; idx < num_coefficients(); ++idx) {
            // e^{i j pi k / m}, reduced mod 2m to keep the argument small
            const Index phase = wrap(frequency(idx) * k, 2 * m_);
            const double angle = std::numbers::pi * static_cast<double>(phase) / static_cast<double>(m_);
            (*e)(k, idx) = Complex(std::cos(angle), std::sin(angle));
        }
    }
    collocation_ = std::move(e);
}

ComplexVector FourierExtensionGrid::evaluate_direct(const ComplexVector& c) const {
    if (c.size() != num_coefficients()) throw ShapeError("FourierExtensionGrid: wrong number of coefficients");
    return *collocation_ * c;
}

ComplexVector FourierExtensionGrid::evaluate(const ComplexVector& c) const {
    if (c.size() != num_coefficients()) throw ShapeError("FourierExtensionGrid: wrong number of coefficients");
    if (!uses_fast_transform()) return evaluate_direct(c);
    const Index period = 2 * m_;
    std::vector<Complex> spectrum(static_cast<std::size_t>(period), Complex(0.0));
    for (Index idx = 0; idx < num_coefficients(); ++idx) {
        spectrum[static_cast<std::size_t>(wrap(frequency(idx), period))] += c(idx);
    }
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<Complex> values;
    fft.inv(values, spectrum);
    ComplexVector u(num_nodes());
    for (Index k = 0; k < num_nodes(); ++k) u(k) = values[static_cast<std::size_t>(k)];
    return u;
}

ComplexVector FourierExtensionGrid::adjoint(const ComplexVector& w) const {
    if (w.size() != num_nodes()) throw ShapeError("FourierExtensionGrid: wrong number of grid values");
    if (!uses_fast_transform()) return collocation_->adjoint() * w;
    const Index period = 2 * m_;
    std::vector<Complex> padded(static_cast<std::size_t>(period), Complex(0.0));
    for (Index k = 0; k < num_nodes(); ++k) padded[static_cast<std::size_t>(k)] = w(k);
    Eigen::FFT<double> fft;
    std::vector<Complex> spectrum;
    fft.fwd(spectrum, padded);
    ComplexVector out(num_coefficients());
    for (Index idx = 0; idx < num_coefficients(); ++idx) {
        out(idx) = spectrum[static_cast<std::size_t>(wrap(frequency(idx), period))];
    }
    return out;
}

ComplexVector FourierExtensionGrid::fit(const ComplexVector& samples) const {
    if (samples.size() != num_nodes()) throw ShapeError("FourierExtensionGrid::fit: wrong number of samples");
    return lsq_min_norm<Complex>(*collocation_, samples);
}

double fe_norm(const ComplexVector& c, const FourierExtensionGrid& grid) {
    const ComplexVector u = grid.evaluate(c);
    return std::sqrt(u.squaredNorm() / static_cast<double>(grid.num_nodes()));
}

Metric<Complex> fe_metric(const FourierExtensionGrid& grid) {
    const auto g = std::make_shared<const FourierExtensionGrid>(grid);
    Metric<Complex> metric;
    metric.distance = [g](const ComplexVector& x, const ComplexVector& y) { return fe_norm(x - y, *g); };
    // d = ||E (x - y)|| / sqrt(m + 1)  =>  grad d = E^H E (x - y) / ((m + 1) d)
    metric.gradient = [g](const ComplexVector& x, const ComplexVector& y) -> ComplexVector {
        const ComplexVector u = g->evaluate(x - y);
        const double nodes = static_cast<double>(g->num_nodes());
        const double d = std::sqrt(u.squaredNorm() / nodes);
        if (d == 0.0) return ComplexVector::Zero(x.size());
        return g->adjoint(u) / (nodes * d);
    };
    return metric;
}

Problem<Complex> bratu_problem(Index n, Index m) {
    return make_bvp(BvpKind::Bratu, n, m);
}

Problem<Complex> carrier_problem(Index n, Index m) {
    return make_bvp(BvpKind::Carrier, n, m);
}

ComplexVector fe_initial_guess(const FourierExtensionGrid& grid, std::string_view preset) {
    if (preset == "zero") return ComplexVector::Zero(grid.num_coefficients());
    if (preset == "x(1-x)") {
        ComplexVector samples(grid.num_nodes());
        for (Index k = 0; k < grid.num_nodes(); ++k) {
            const double x = grid.node(k);
            samples(k) = x * (1.0 - x);
        }
        return grid.fit(samples);
    }
    throw InvalidInputError("unknown Fourier-extension initial guess '" + std::string(preset) +
                            "' (expected zero or x(1-x))");
}

}  // namespace dgn
