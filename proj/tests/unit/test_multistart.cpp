#include <doctest.h>

#include <sstream>

#include "dgn/error.hpp"
#include "dgn/multistart.hpp"
#include "dgn/problems.hpp"
#include "oracles.hpp"

using namespace dgn;

namespace {

RealVector vec(std::initializer_list<double> values) {
    RealVector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

MultistartConfig ftrig_config(double half_width, std::uint64_t seed) {
    MultistartConfig c;
    c.bounds = centered_box(2, half_width);
    c.seed = seed;
    c.solver.max_iters = 2000;
    return c;
}

std::vector<RealVector> ftrig_minima() {
    SolverConfig cfg;
    cfg.max_iters = 2000;
    DeflationLoopOptions opt;
    opt.rounds = 42;
    const auto loop = deflation_loop<double>(Method::GoodGN, ftrig(), vec({1.0, 3.0}), cfg, {}, opt);
    std::vector<RealVector> minima;
    for (const auto& s : loop.solutions.items()) minima.push_back(s.x);
    return minima;
}

}  // namespace

TEST_CASE("multistart from a single start inside a basin") {
    MultistartConfig c;
    c.bounds = {{2.9, 3.1}, {1.9, 2.1}};
    c.n_starts = 1;
    const auto res = multistart(himmelblau(), c);
    REQUIRE(res.solutions.size() == 1);
    CHECK((res.solutions.items()[0].x - vec({3.0, 2.0})).norm() < 1e-9);
    REQUIRE(res.discoveries.size() == 1);
    CHECK(res.discoveries[0].index == 1);
    CHECK(res.discoveries[0].start == 0);
    CHECK(res.discoveries[0].residual_evals == res.counts.residual);
}

TEST_CASE("sample_start is uniform in the box and keyed by index") {
    const auto box = std::vector<Interval>{{-1.0, 3.0}, {10.0, 10.5}};
    for (int i = 0; i < 200; ++i) {
        const RealVector x = sample_start(box, 7, i);
        CHECK(x(0) >= -1.0);
        CHECK(x(0) < 3.0);
        CHECK(x(1) >= 10.0);
        CHECK(x(1) < 10.5);
        CHECK(x == sample_start(box, 7, i));
    }
    CHECK(sample_start(box, 7, 0) != sample_start(box, 8, 0));
    CHECK(sample_start(box, 7, 0) != sample_start(box, 7, 1));
}

TEST_CASE("MultistartConfig validation") {
    MultistartConfig c = ftrig_config(10.0, 0);
    CHECK_NOTHROW(c.validate(2));
    CHECK_THROWS_AS(c.validate(3), ConfigError);
    c.n_starts = 0;
    CHECK_THROWS_AS(c.validate(2), ConfigError);
    c = ftrig_config(10.0, 0);
    c.bounds[1] = {1.0, 1.0};
    CHECK_THROWS_AS(c.validate(2), ConfigError);
    c = ftrig_config(10.0, 0);
    c.bounds[0].hi = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(c.validate(2), ConfigError);
    CHECK_THROWS_AS(multistart(himmelblau(), MultistartConfig{}), ConfigError);
}

TEST_CASE("dedupe examples") {
    const double tol = 1e-4;
    CHECK(dedupe({vec({3.0, 2.0}), vec({3.0, 2.0})}, tol).size() == 1);
    CHECK(dedupe({vec({3.0, 2.0}), vec({3.0, 2.0 + 2.0 * tol})}, tol).size() == 2);
    const auto first = dedupe({vec({1.0, 1.0}), vec({1.0, 1.0 + 0.5 * tol})}, tol);
    CHECK(first.items()[0].x == vec({1.0, 1.0}));
    CHECK_THROWS_AS(dedupe({vec({0.0})}, 0.0), InvalidInputError);
}

TEST_CASE("dedupe of perturbed FTrig minima") {
    const auto minima = ftrig_minima();
    REQUIRE(minima.size() == 42);
    const double tol = 1e-4;
    std::vector<RealVector> points = minima;
    std::uniform_int_distribution<std::size_t> pick(0, minima.size() - 1);
    for (int i = 0; i < 100; ++i) {
        RealVector offset = oracle::random_vector(2);
        offset *= 0.5 * tol * oracle::uniform(0.0, 1.0) / offset.norm();
        points.push_back(minima[pick(oracle::rng())] + offset);
    }
    CHECK(dedupe(points, tol).size() == 42);
}

TEST_CASE("property: fixed seed gives bit-identical results, threaded or not") {
    const auto p = ftrig();
    const auto a = multistart(p, ftrig_config(10.0, 3));
    const auto b = multistart(p, ftrig_config(10.0, 3));
    auto threaded_config = ftrig_config(10.0, 3);
    threaded_config.threads = 4;
    const auto c = multistart(p, threaded_config);
    for (const auto* other : {&b, &c}) {
        REQUIRE(other->solutions.size() == a.solutions.size());
        for (std::size_t i = 0; i < a.solutions.size(); ++i) {
            CHECK(other->solutions.items()[i].x == a.solutions.items()[i].x);
        }
        REQUIRE(other->discoveries.size() == a.discoveries.size());
        for (std::size_t i = 0; i < a.discoveries.size(); ++i) {
            CHECK(other->discoveries[i].start == a.discoveries[i].start);
            CHECK(other->discoveries[i].residual_evals == a.discoveries[i].residual_evals);
        }
        CHECK(other->counts.residual == a.counts.residual);
    }
}

TEST_CASE("property: returned minima are stationary and near the box") {
    const auto p = ftrig();
    for (double half_width : {10.0, 20.0}) {
        const auto c = ftrig_config(half_width, 1);
        const auto res = multistart(p, c);
        for (const auto& s : res.solutions.items()) {
            CHECK(p.gradient(s.x).norm() <= 1e-6);
            for (Index i = 0; i < 2; ++i) {
                const double slack = 0.1 * (c.bounds[i].hi - c.bounds[i].lo);
                CHECK(s.x(i) >= c.bounds[i].lo - slack);
                CHECK(s.x(i) <= c.bounds[i].hi + slack);
            }
        }
    }
}

TEST_CASE("FTrig: 300 starts in the 20x20 box find all 42 minima for at least 9 of 10 seeds") {
    int complete = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        if (multistart(ftrig(), ftrig_config(10.0, seed)).solutions.size() == 42) ++complete;
    }
    CHECK(complete >= 9);
}

TEST_CASE("FTrig: 300 starts in the 40x40 box miss minima for some seeds") {
    int incomplete = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto res = multistart(ftrig(), ftrig_config(20.0, seed));
        int inside = 0;
        for (const auto& s : res.solutions.items()) {
            if (s.x.cwiseAbs().maxCoeff() <= 10.0) ++inside;
        }
        if (inside < 42) ++incomplete;
    }
    CHECK(incomplete >= 1);
}

TEST_CASE("property: multistart needs more evaluations than deflation to reach all FTrig minima") {
    SolverConfig cfg;
    cfg.max_iters = 2000;
    DeflationLoopOptions opt;
    opt.rounds = 42;
    const auto ms = multistart(ftrig(), ftrig_config(10.0, 0));
    REQUIRE(ms.discoveries.size() >= 42);
    const auto at_42 = ms.discoveries[41].residual_evals;
    for (Method m : {Method::GoodGN, Method::BadGN}) {
        const auto loop = deflation_loop<double>(m, ftrig(), vec({1.0, 3.0}), cfg, {}, opt);
        CHECK(at_42 > loop.counts.residual);
    }
}

TEST_CASE("discoveries CSV") {
    std::ostringstream out;
    write_discoveries_csv(out, {Discovery{1, 0, 12, 10}, Discovery{2, 4, 60, 51}});
    CHECK(out.str() == "discovery,start,residual_evals,jacobian_evals\n1,0,12,10\n2,4,60,51\n");
}
