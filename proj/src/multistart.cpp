#include "dgn/multistart.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <thread>

#include "dgn/error.hpp"

namespace dgn {

void MultistartConfig::validate(Index num_params) const {
    if (bounds.empty()) throw ConfigError("multistart: bounds must not be empty");
    if (static_cast<Index>(bounds.size()) != num_params) {
        throw ConfigError("multistart: need one bound interval per parameter");
    }
    for (const auto& b : bounds) {
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
            throw ConfigError("multistart: bounds must be finite nonempty intervals");
        }
    }
    if (n_starts < 1) throw ConfigError("multistart: n_starts must be at least 1");
    if (!(gradient_tol > 0.0)) throw ConfigError("multistart: gradient_tol must be positive");
    if (!(distinct_tol > 0.0)) throw ConfigError("multistart: distinct_tol must be positive");
    if (threads < 0) throw ConfigError("multistart: threads must be nonnegative");
    solver.validate();
}

std::vector<Interval> centered_box(Index dim, double half_width) {
    return std::vector<Interval>(static_cast<std::size_t>(dim), Interval{-half_width, half_width});
}

RealVector sample_start(const std::vector<Interval>& bounds, std::uint64_t seed, int index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 gen(seq);
    RealVector x(static_cast<Index>(bounds.size()));
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        x(static_cast<Index>(i)) = bounds[i].lo + u * (bounds[i].hi - bounds[i].lo);
    }
    return x;
}

MultistartResult multistart(const Problem<double>& problem, const MultistartConfig& config) {
    config.validate(problem.num_params);
    const int n = config.n_starts;
    std::vector<SolveResult<double>> results(static_cast<std::size_t>(n));
    std::vector<RealVector> starts(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) starts[static_cast<std::size_t>(s)] = sample_start(config.bounds, config.seed, s);

    auto run_range = [&](int begin, int stride) {
        for (int s = begin; s < n; s += stride) {
            const auto i = static_cast<std::size_t>(s);
            results[i] = gauss_newton<double>(problem, starts[i], config.solver);
        }
    };
    int threads = config.threads == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : config.threads;
    threads = std::clamp(threads, 1, n);
    if (threads == 1) {
        run_range(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(run_range, t, threads);
    }

    MultistartResult out{SolutionSet<double>(problem.metric, config.distinct_tol, false), {}, {}, {}};
    for (int s = 0; s < n; ++s) {
        const auto i = static_cast<std::size_t>(s);
        auto& res = results[i];
        out.counts += res.counts;
        StartRecord rec;
        rec.start = s;
        rec.x0 = starts[i];
        rec.status = res.status;
        rec.iterations = res.iterations;
        rec.counts = res.counts;
        if (res.converged() && res.grad_norm <= config.gradient_tol) {
            Solution<double> sol;
            sol.x = res.x;
            sol.residual_norm = res.residual_norm;
            sol.objective = res.objective;
            sol.grad_norm = res.grad_norm;
            sol.origin = s;
            sol.iterations = res.iterations;
            sol.counts = res.counts;
            rec.solution_index = static_cast<int>(out.solutions.add(std::move(sol), &rec.new_solution));
            if (rec.new_solution) {
                out.discoveries.push_back(Discovery{static_cast<int>(out.solutions.size()), s,
                                                    out.counts.residual, out.counts.jacobian});
            }
        }
        out.starts.push_back(std::move(rec));
    }
    return out;
}

SolutionSet<double> dedupe(const std::vector<RealVector>& points, double tol, const Metric<double>& metric) {
    if (!(tol > 0.0)) throw InvalidInputError("dedupe: tolerance must be positive");
    SolutionSet<double> set(metric, tol, false);
    for (std::size_t i = 0; i < points.size(); ++i) {
        Solution<double> sol;
        sol.x = points[i];
        sol.origin = static_cast<int>(i);
        set.add(std::move(sol));
    }
    return set;
}

void write_discoveries_csv(std::ostream& out, const std::vector<Discovery>& discoveries) {
    out << "discovery,start,residual_evals,jacobian_evals\n";
    for (const auto& d : discoveries) {
        out << d.index << ',' << d.start << ',' << d.residual_evals << ',' << d.jacobian_evals << '\n';
    }
}

}  // namespace dgn
