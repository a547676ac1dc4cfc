#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dgn/problem.hpp"
#include "dgn/solvers.hpp"
#include "dgn/types.hpp"

namespace dgn {

struct MultistartConfig {
    /// Sampling box, one interval per parameter. Not enforced during the solves.
    std::vector<Interval> bounds;
    int n_starts = 300;
    std::uint64_t seed = 0;
    SolverConfig solver;
    /// Converged points are kept only when ||grad f|| is at most this.
    double gradient_tol = 1e-6;
    /// Absolute metric distance below which two minima are merged.
    double distinct_tol = kDistinctTolerance;
    /// Worker threads; 0 uses the hardware concurrency.
    int threads = 1;

    void validate(Index num_params) const;
};

/// Box with half-width `half_width` around the origin in every coordinate.
std::vector<Interval> centered_box(Index dim, double half_width);

/// Start point `index` for `seed`: uniform in the box, independent of every other index.
RealVector sample_start(const std::vector<Interval>& bounds, std::uint64_t seed, int index);

struct StartRecord {
    int start = 0;
    RealVector x0;
    SolveStatus status = SolveStatus::MaxIters;
    int iterations = 0;
    EvalCounts counts;
    /// Index into the solution set, or -1 when the start produced nothing usable.
    int solution_index = -1;
    bool new_solution = false;
};

struct Discovery {
    /// 1-based count of distinct minima after this discovery.
    int index = 0;
    int start = 0;
    /// Evaluations spent by starts 0..start inclusive.
    std::int64_t residual_evals = 0;
    std::int64_t jacobian_evals = 0;
};

struct MultistartResult {
    SolutionSet<double> solutions;
    std::vector<StartRecord> starts;
    std::vector<Discovery> discoveries;
    EvalCounts counts;
};

/// Gauss-Newton with line search from n_starts uniform random starts.
///
/// Starts run in parallel when threads != 1 but are merged in start order,
/// so the result depends only on the problem and the config.
MultistartResult multistart(const Problem<double>& problem, const MultistartConfig& config);

/// Greedy clustering: each point joins the first stored representative within `tol`, else becomes one.
SolutionSet<double> dedupe(const std::vector<RealVector>& points, double tol,
                           const Metric<double>& metric = Metric<double>::euclidean());

/// CSV with header discovery,start,residual_evals,jacobian_evals.
void write_discoveries_csv(std::ostream& out, const std::vector<Discovery>& discoveries);

}  // namespace dgn
