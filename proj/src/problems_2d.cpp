#include <array>
#include <numbers>

#include "dgn/error.hpp"
#include "dgn/problems.hpp"

namespace dgn {

namespace {

/// Value and first two derivatives of a polynomial in one variable.
struct Jet {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Product of factors with known (value, d1, d2), differentiated by the product rule.
template <std::size_t N>
Jet product_jet(const std::array<Jet, N>& factors) {
    Jet out;
    out.value = 1.0;
    for (const auto& f : factors) out.value *= f.value;
    for (std::size_t i = 0; i < N; ++i) {
        double others = 1.0;
        for (std::size_t k = 0; k < N; ++k)
            if (k != i) others *= factors[k].value;
        out.d1 += factors[i].d1 * others;
        out.d2 += factors[i].d2 * others;
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            double rest = 1.0;
            for (std::size_t k = 0; k < N; ++k)
                if (k != i && k != j) rest *= factors[k].value;
            out.d2 += factors[i].d1 * factors[j].d1 * rest;
        }
    }
    return out;
}

// 1 - s^2 / c
Jet quadratic_factor(double s, double c) {
    return {1.0 - s * s / c, -2.0 * s / c, -2.0 / c};
}

Jet sine_product(double s) {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    return product_jet<4>({Jet{s, 1.0, 0.0}, quadratic_factor(s, pi2), quadratic_factor(s, 4.0 * pi2),
                           quadratic_factor(s, 9.0 * pi2)});
}

Jet cosine_product(double t) {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    return product_jet<3>(
        {quadratic_factor(t, 0.25 * pi2), quadratic_factor(t, 2.25 * pi2), quadratic_factor(t, 6.25 * pi2)});
}

void require_size(const RealVector& x, Index n, const char* name) {
    if (x.size() != n) throw ShapeError(std::string(name) + ": expected " + std::to_string(n) + " parameters");
}

}  // namespace

Problem<double> himmelblau() {
    Problem<double> p;
    p.name = "himmelblau";
    p.num_params = 2;
    p.num_residuals = 2;
    p.residual = [](const RealVector& v) {
        require_size(v, 2, "himmelblau");
        const double x = v(0), y = v(1);
        RealVector r(2);
        r << x * x + y - 11.0, x + y * y - 7.0;
        return r;
    };
    p.jacobian = [](const RealVector& v) {
        require_size(v, 2, "himmelblau");
        RealMatrix j(2, 2);
        j << 2.0 * v(0), 1.0, 1.0, 2.0 * v(1);
        return j;
    };
    p.residual_hessians = [](const RealVector& v) {
        require_size(v, 2, "himmelblau");
        RealMatrix h1 = RealMatrix::Zero(2, 2);
        RealMatrix h2 = RealMatrix::Zero(2, 2);
        h1(0, 0) = 2.0;
        h2(1, 1) = 2.0;
        return std::vector<RealMatrix>{h1, h2};
    };
    p.bounds = {{-5.0, 5.0}, {-5.0, 5.0}};
    return p;
}

Problem<double> ftrig(double a) {
    if (a == 0.0) throw InvalidInputError("ftrig: amplitude a must be nonzero");
    Problem<double> p;
    p.name = "ftrig";
    p.num_params = 2;
    p.num_residuals = 3;
    p.residual = [a](const RealVector& v) {
        require_size(v, 2, "ftrig");
        const double x = v(0), y = v(1);
        RealVector r(3);
        r << a * sine_product(x + y).value, a * cosine_product(x - y).value, a + 0.01 * (x * x + y * y);
        return r;
    };
    p.jacobian = [a](const RealVector& v) {
        require_size(v, 2, "ftrig");
        const double x = v(0), y = v(1);
        const double g1 = a * sine_product(x + y).d1;
        const double g2 = a * cosine_product(x - y).d1;
        RealMatrix j(3, 2);
        j << g1, g1, g2, -g2, 0.02 * x, 0.02 * y;
        return j;
    };
    p.residual_hessians = [a](const RealVector& v) {
        require_size(v, 2, "ftrig");
        const double x = v(0), y = v(1);
        const double h1 = a * sine_product(x + y).d2;
        const double h2 = a * cosine_product(x - y).d2;
        RealMatrix m1(2, 2), m2(2, 2);
        m1 << h1, h1, h1, h1;
        m2 << h2, -h2, -h2, h2;
        return std::vector<RealMatrix>{m1, m2, 0.02 * RealMatrix::Identity(2, 2)};
    };
    p.bounds = {{-10.0, 10.0}, {-10.0, 10.0}};
    return p;
}

}  // namespace dgn
