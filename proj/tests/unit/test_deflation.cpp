#include <doctest.h>

#include <cmath>

#include "dgn/deflation.hpp"
#include "dgn/error.hpp"
#include "dgn/problems.hpp"
#include "oracles.hpp"

using namespace dgn;
using oracle::random_vector;

namespace {

RealVector vec2(double a, double b) {
    RealVector v(2);
    v << a, b;
    return v;
}

DeflationConfig variant_config(DeflationVariant variant) {
    DeflationConfig c;
    c.variant = variant;
    return c;
}

const DeflationVariant kVariants[] = {DeflationVariant::MultiShift, DeflationVariant::SingleShift,
                                      DeflationVariant::Exponential};

}  // namespace

TEST_CASE("mu_value examples") {
    const DeflationState<double> empty;
    CHECK(mu_value(empty, vec2(0.3, -2.0)) == 1.0);

    const auto one = add_deflation_point(empty, vec2(1.0, 0.0));
    CHECK(mu_value(one, vec2(0.0, 0.0)) == doctest::Approx(2.0).epsilon(1e-15));

    const auto two = add_deflation_point(one, vec2(0.0, 2.0));
    CHECK(mu_value(two, vec2(0.0, 0.0)) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("mu_value of the other variants follows their definitions") {
    const RealVector y1 = vec2(1.0, 0.0), y2 = vec2(0.0, 2.0), x = vec2(0.0, 0.0);
    auto single = DeflationState<double>(variant_config(DeflationVariant::SingleShift)).with_point(y1).with_point(y2);
    CHECK(single.mu(x) == doctest::Approx(1.0 + 1.0 * 0.25).epsilon(1e-15));
    auto expo = DeflationState<double>(variant_config(DeflationVariant::Exponential)).with_point(y1).with_point(y2);
    CHECK(expo.mu(x) == doctest::Approx(std::exp(1.0) * std::exp(0.5)).epsilon(1e-14));
}

TEST_CASE("grad_eta examples") {
    const DeflationState<double> empty;
    CHECK(grad_eta(empty, vec2(1.0, 2.0)).norm() == 0.0);

    const RealVector x = vec2(0.5, -0.25);
    const RealVector y = x + vec2(0.6, 0.8);
    const auto expo = DeflationState<double>(variant_config(DeflationVariant::Exponential)).with_point(y);
    CHECK(oracle::rel_err(grad_eta(expo, x), RealVector(y - x)) < 1e-15);

    const auto shifted = DeflationState<double>().with_point(x + vec2(1.0, 0.0));
    CHECK(oracle::rel_err(grad_eta(shifted, x), vec2(1.0, 0.0)) < 1e-15);
}

TEST_CASE("add_deflation_point") {
    const DeflationState<double> empty;
    const auto one = empty.with_point(vec2(3.0, 2.0));
    CHECK(empty.size() == 0);
    CHECK(one.size() == 1);
    const auto twice = one.with_point(vec2(3.0, 2.0));
    CHECK(twice.size() == 2);

    // repeated point: mu ~ d^(-2 theta) close to it
    for (double d : {1e-3, 1e-4, 1e-5}) {
        const RealVector x = vec2(3.0 + d, 2.0);
        CHECK(twice.mu(x) * std::pow(d, 4.0) == doctest::Approx(1.0).epsilon(1e-5));
    }

    const auto far = empty.with_point(vec2(0.0, 0.0));
    CHECK(far.mu(vec2(1e3, 0.0)) == doctest::Approx(1.0 + 1e-6).epsilon(1e-15));

    RealVector three(3);
    three << 1, 2, 3;
    CHECK_THROWS_AS((void)one.with_point(three), ShapeError);
}

TEST_CASE("at a deflated point mu and grad_eta refuse to evaluate") {
    const auto state = DeflationState<double>().with_point(vec2(3.0, 2.0));
    CHECK_THROWS_AS(state.mu(vec2(3.0, 2.0)), AtDeflatedPointError);
    CHECK_THROWS_AS(state.grad_eta(vec2(3.0, 2.0 + 1e-14)), AtDeflatedPointError);
    CHECK_NOTHROW(state.mu(vec2(3.0, 2.0 + 1e-9)));
}

TEST_CASE("config validation") {
    DeflationConfig c;
    c.theta = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.theta = 2.0;
    c.sigma = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.variant = DeflationVariant::Exponential;
    CHECK_NOTHROW(c.validate());
    CHECK(deflation_variant_from_string(to_string(DeflationVariant::SingleShift)) == DeflationVariant::SingleShift);
    CHECK_THROWS_AS(deflation_variant_from_string("matrix"), ConfigError);
}

TEST_CASE("property: grad_eta matches finite differences of log mu") {
    for (auto variant : kVariants) {
        CAPTURE(to_string(variant));
        DeflationConfig c = variant_config(variant);
        c.theta = 2.0 + oracle::uniform(0.0, 1.0);
        c.sigma = oracle::uniform(0.0, 2.0);
        DeflationState<double> state(c);
        for (int i = 0; i < 3; ++i) state = state.with_point(random_vector(2, -3.0, 3.0));
        int checked = 0;
        while (checked < 100) {
            const RealVector x = random_vector(2, -4.0, 4.0);
            bool near = false;
            for (const auto& y : state.points()) near = near || (x - y).norm() < 0.2;
            if (near) continue;
            const RealVector fd = oracle::fd_gradient([&](const RealVector& z) { return std::log(state.mu(z)); }, x);
            const RealVector g = state.grad_eta(x);
            CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
            ++checked;
        }
    }
}

TEST_CASE("property: grad_eta matches an independent hand-coded multi-shift gradient") {
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RealVector> points;
        DeflationState<double> state;
        for (int i = 0; i < 4; ++i) {
            points.push_back(random_vector(3, -2.0, 2.0));
            state = state.with_point(points.back());
        }
        const RealVector x = random_vector(3, -2.0, 2.0);
        const double mu = oracle::multi_shift_mu(x, points, 2.0, 1.0);
        CHECK(state.mu(x) == doctest::Approx(mu).epsilon(1e-12));
        const RealVector want = oracle::multi_shift_grad_mu(x, points, 2.0, 1.0) / mu;
        CHECK(oracle::rel_err(state.grad_eta(x), want) < 1e-12);
    }
}

TEST_CASE("property: far-field flatness") {
    for (int trial = 0; trial < 50; ++trial) {
        DeflationState<double> state;
        const int n = 1 + trial % 5;
        for (int i = 0; i < n; ++i) state = state.with_point(random_vector(2));
        const RealVector dir = random_vector(2).normalized();
        const RealVector x = (2.0 + oracle::uniform(0.0, 100.0)) * dir * 2.0;
        double dmin = 1e300;
        for (const auto& y : state.points()) dmin = std::min(dmin, (x - y).norm());
        if (dmin < 2.0) continue;
        CHECK(std::abs(state.mu(x) - 1.0) <= 2.0 * n / (dmin * dmin));
    }
}

TEST_CASE("property: mu grows without bound towards every deflated point") {
    for (auto variant : kVariants) {
        DeflationState<double> state(variant_config(variant));
        const RealVector y = vec2(0.7, -1.1);
        state = state.with_point(y).with_point(vec2(-2.0, 3.0));
        for (int dir = 0; dir < 10; ++dir) {
            const RealVector u = random_vector(2).normalized();
            // compared through log mu: the exponential variant overflows a double near y
            double previous = -1e300;
            for (double d = 0.5; d > 1e-6; d *= 0.25) {
                const double log_mu = state.log_mu(RealVector(y + d * u));
                CHECK(log_mu > previous);
                previous = log_mu;
            }
            CHECK(previous > std::log(1e10));
        }
    }
}

TEST_CASE("property: multi-shift grad_eta is additive over points") {
    for (int trial = 0; trial < 50; ++trial) {
        DeflationState<double> all;
        RealVector sum = RealVector::Zero(3);
        const RealVector x = random_vector(3, -2.0, 2.0);
        for (int i = 0; i < 5; ++i) {
            const RealVector y = random_vector(3, -2.0, 2.0);
            all = all.with_point(y);
            sum += DeflationState<double>().with_point(y).grad_eta(x);
        }
        CHECK((all.grad_eta(x) - sum).norm() <= 1e-14 * std::max(1.0, sum.norm()));
    }
}

TEST_CASE("property: superlevel sets of the shifted-power operator are convex near a deflated point") {
    const RealVector y1 = vec2(0.0, 0.0);
    const auto state = DeflationState<double>().with_point(y1).with_point(vec2(2.0, 1.0));
    const double level = state.mu(vec2(0.1, 0.0));
    int pairs = 0;
    while (pairs < 500) {
        const RealVector a = random_vector(2, -0.2, 0.2);
        const RealVector b = random_vector(2, -0.2, 0.2);
        if (state.mu(a) < level || state.mu(b) < level) continue;
        const double t = oracle::uniform(0.0, 1.0);
        const RealVector mid = t * a + (1.0 - t) * b;
        if ((mid - y1).norm() < 1e-12) continue;
        CHECK(state.mu(mid) >= level * (1.0 - 1e-12));
        ++pairs;
    }
}

TEST_CASE("Fourier-extension metric gradient matches finite differences") {
    const FourierExtensionGrid grid(4, 12);
    const Metric<Complex> metric = fe_metric(grid);
    const ComplexVector x = oracle::random_complex_vector(grid.num_coefficients());
    const ComplexVector y = oracle::random_complex_vector(grid.num_coefficients());
    const ComplexVector g = metric.gradient(x, y);
    const double h = 1e-6;
    for (Index j = 0; j < x.size(); ++j) {
        for (Complex dir : {Complex(1.0, 0.0), Complex(0.0, 1.0)}) {
            ComplexVector xp = x, xm = x;
            xp(j) += h * dir;
            xm(j) -= h * dir;
            const double fd = (metric.distance(xp, y) - metric.distance(xm, y)) / (2.0 * h);
            // directional derivative = Re<g, dir e_j>
            const double want = (std::conj(g(j)) * dir).real();
            CHECK(fd == doctest::Approx(want).epsilon(1e-6).scale(1.0));
        }
    }
    CHECK(metric.distance(x, x) == 0.0);
    CHECK(metric.distance(x, y) == doctest::Approx(metric.distance(y, x)).epsilon(1e-14));
}

TEST_CASE("complex deflation gradient matches finite differences of log mu") {
    const FourierExtensionGrid grid(3, 8);
    DeflationState<Complex> state(DeflationConfig{}, fe_metric(grid));
    state = state.with_point(oracle::random_complex_vector(7)).with_point(oracle::random_complex_vector(7));
    const ComplexVector x = oracle::random_complex_vector(7, 2.0);
    const ComplexVector g = state.grad_eta(x);
    const double h = 1e-6;
    for (Index j = 0; j < 7; ++j) {
        for (Complex dir : {Complex(1.0, 0.0), Complex(0.0, 1.0)}) {
            ComplexVector xp = x, xm = x;
            xp(j) += h * dir;
            xm(j) -= h * dir;
            const double fd = (state.log_mu(xp) - state.log_mu(xm)) / (2.0 * h);
            CHECK(fd == doctest::Approx((std::conj(g(j)) * dir).real()).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("beta_field") {
    const auto h = himmelblau();
    Grid2D grid;
    grid.nx = 21;
    grid.ny = 21;
    const BetaField flat = beta_field(h, DeflationState<double>(), grid);
    REQUIRE(flat.values.size() == 441u);
    for (const auto& v : flat.values) {
        REQUIRE(v.has_value());
        CHECK(*v == 1.0);
    }

    const auto state = DeflationState<double>().with_point(vec2(3.0, 2.0));
    // the three unfound roots sit on beta = 1
    const RealVector roots[] = {vec2(-2.805118086952745, 3.131312518250573),
                                vec2(-3.779310253377747, -3.283185991286170),
                                vec2(3.584428340330492, -1.848126526964404)};
    for (const auto& root : roots) {
        Grid2D at;
        at.x_lo = at.x_hi = root(0);
        at.y_lo = at.y_hi = root(1);
        at.nx = at.ny = 1;
        const auto field = beta_field(h, state, at);
        REQUIRE(field.at(0, 0).has_value());
        CHECK(*field.at(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    }

    Grid2D near;
    near.x_lo = 3.0 - 1e-2;
    near.x_hi = 3.0 + 1e-2;
    near.y_lo = 2.0 - 1e-2;
    near.y_hi = 2.0 + 1e-2;
    near.nx = near.ny = 4;
    const auto field = beta_field(h, state, near);
    for (const auto& v : field.values) {
        REQUIRE(v.has_value());
        CHECK(*v < 0.0);
    }

    CHECK_THROWS_AS(beta_field(mn12_problem(mn12_default_parameters()), DeflationState<double>(), grid),
                    ConfigError);
}

TEST_CASE("beta_field marks nodes on a deflated point as missing") {
    const auto h = himmelblau();
    const auto state = DeflationState<double>().with_point(vec2(0.0, 0.0));
    Grid2D grid;
    grid.x_lo = -1;
    grid.x_hi = 1;
    grid.y_lo = -1;
    grid.y_hi = 1;
    grid.nx = grid.ny = 3;
    const auto field = beta_field(h, state, grid);
    CHECK_FALSE(field.at(1, 1).has_value());
    CHECK(field.at(0, 0).has_value());
}
