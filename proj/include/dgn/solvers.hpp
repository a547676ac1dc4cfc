#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dgn/deflation.hpp"
#include "dgn/problem.hpp"
#include "dgn/types.hpp"

namespace dgn {

struct LineSearchConfig {
    double c1 = 1e-4;
    double alpha_min = 1e-12;
    int max_trials = 50;
};

struct SolverConfig {
    /// Stopping threshold on ||p|| in the problem metric (Gauss-Newton family), ||r|| (Newton rootfinding)
    /// or ||grad f|| (Newton for optimization).
    double step_tol = 1e-10;
    int max_iters = 500;
    /// Deflated branch is taken only when <grad eta, p> > epsilon.
    double epsilon = 0.01;
    LineSearchConfig line_search;
    /// When J (Gauss-Newton family) or H_f (Newton for optimization) is rank
    /// deficient, take the minimum-norm step instead of stopping. Steps that need
    /// an inverse (Newton rootfinding, the bad deflated branch) always stop.
    bool min_norm_fallback = true;

    void validate() const;
};

enum class SolveStatus { Converged, MaxIters, RankDeficient, LineSearchFailed, StepUndefined };
std::string_view to_string(SolveStatus status);

enum class Branch { Deflated, Undeflated };
std::string_view to_string(Branch branch);

enum class Method { NewtonRoot, NewtonOpt, GaussNewton, GoodGN, BadGN };
std::string_view to_string(Method method);
/// Accepts the short names above and the long forms (good_deflated_gn, ...).
Method method_from_string(std::string_view name);

struct EvalCounts {
    std::int64_t residual = 0;
    std::int64_t jacobian = 0;
    std::int64_t hessian = 0;

    EvalCounts& operator+=(const EvalCounts& other) {
        residual += other.residual;
        jacobian += other.jacobian;
        hessian += other.hessian;
        return *this;
    }
};

template <Field S>
struct IterationRecord {
    int k = 0;
    /// Iterate at which the step was computed.
    Vector<S> x;
    double residual_norm = 0.0;
    double objective = 0.0;
    /// ||J^H r||
    double grad_norm = 0.0;
    /// Length of the undeflated step p, measured in the problem's metric.
    double step_norm = 0.0;
    double beta = 1.0;
    double eta_dot_p = 0.0;
    Branch branch = Branch::Undeflated;
    double alpha = 1.0;
    /// Bad Gauss-Newton only: omega and <p_hat, grad eta> on the deflated branch.
    double omega = std::numeric_limits<double>::quiet_NaN();
    double eta_dot_step = std::numeric_limits<double>::quiet_NaN();
    /// Line search data: <grad f, p> and f at the accepted point.
    double slope = std::numeric_limits<double>::quiet_NaN();
    double objective_after = std::numeric_limits<double>::quiet_NaN();
};

template <Field S>
struct SolveResult {
    SolveStatus status = SolveStatus::MaxIters;
    Vector<S> x;
    std::vector<IterationRecord<S>> trace;
    EvalCounts counts;
    int iterations = 0;
    double residual_norm = 0.0;
    double objective = 0.0;
    double grad_norm = 0.0;
    std::string message;

    bool converged() const { return status == SolveStatus::Converged; }
};

// ---------------------------------------------------------------------------
// Line search

struct LineSearchResult {
    bool success = false;
    double alpha = 0.0;
    double objective = 0.0;
    int trials = 0;
};

/// f(x + alpha p) <= f0 + c1 alpha slope, up to a rounding allowance of 1e-14 |f0|.
bool armijo_satisfied(double f0, double f_alpha, double alpha, double slope, double c1);

/// Backtracking on phi(alpha) = f(x + alpha p) starting from alpha = 1.
///
/// On rejection the next trial minimizes the quadratic through phi(0), phi'(0)
/// and phi(alpha), clamped to [0.1 alpha, 0.5 alpha]. Non-finite trial values
/// count as rejections. Fails once alpha drops below alpha_min or max_trials
/// evaluations were spent.
LineSearchResult quadratic_line_search(const std::function<double(double)>& phi, double f0, double slope,
                                       const LineSearchConfig& config);

template <Field S>
LineSearchResult quadratic_line_search(const std::function<double(const Vector<S>&)>& f, const Vector<S>& x,
                                       const Vector<S>& p, double f0, double slope, const LineSearchConfig& config) {
    return quadratic_line_search([&](double alpha) { return f(Vector<S>(x + alpha * p)); }, f0, slope, config);
}

// ---------------------------------------------------------------------------
// Solvers

template <Field S>
SolveResult<S> newton_root(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config);

template <Field S>
SolveResult<S> deflated_newton_root(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                                    const DeflationState<S>& state);

/// Newton on grad f = J^T r with H_f = J^T J + sum_i r_i H_{r_i}; no line search.
SolveResult<double> deflated_newton_opt(const Problem<double>& problem, const RealVector& x0,
                                        const SolverConfig& config, const DeflationState<double>& state);

template <Field S>
SolveResult<S> gauss_newton(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config);

template <Field S>
SolveResult<S> good_deflated_gn(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                                const DeflationState<S>& state);

template <Field S>
SolveResult<S> bad_deflated_gn(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                               const DeflationState<S>& state);

/// Dispatches on method. GaussNewton ignores the state; NewtonOpt needs a real problem with Hessians.
template <Field S>
SolveResult<S> solve(Method method, const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                     const DeflationState<S>& state);

// ---------------------------------------------------------------------------
// Solutions and the deflation loop

template <Field S>
struct Solution {
    Vector<S> x;
    double residual_norm = 0.0;
    double objective = 0.0;
    double grad_norm = 0.0;
    /// Round (deflation loop) or start index (multistart) that produced it.
    int origin = 0;
    int iterations = 0;
    EvalCounts counts;
};

/// Points closer than tol_scale * (1 + d(y, 0)) to a stored y count as the same solution
/// (or closer than tol_scale itself when the set uses absolute tolerances).
inline constexpr double kDistinctTolerance = 1e-4;

template <Field S>
class SolutionSet {
public:
    explicit SolutionSet(Metric<S> metric = Metric<S>::euclidean(), double tol_scale = kDistinctTolerance,
                         bool relative = true);

    /// Appends unless a stored solution is within tolerance; returns the index of the match or new entry.
    std::size_t add(Solution<S> solution, bool* inserted = nullptr);
    std::optional<std::size_t> find(const Vector<S>& x) const;

    const std::vector<Solution<S>>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    const Metric<S>& metric() const { return metric_; }
    double tol_scale() const { return tol_scale_; }
    bool relative() const { return relative_; }

private:
    Metric<S> metric_;
    double tol_scale_;
    bool relative_;
    std::vector<Solution<S>> items_;
};

template <Field S>
struct RoundRecord {
    int round = 0;
    SolveResult<S> result;
    /// Index into the solution set, or -1 if the round did not converge.
    int solution_index = -1;
    bool new_solution = false;
};

struct DeflationLoopOptions {
    int rounds = 1;
    bool stop_on_failure = true;
};

template <Field S>
struct DeflationLoopResult {
    SolutionSet<S> solutions;
    std::vector<RoundRecord<S>> rounds;
    DeflationState<S> state;
    EvalCounts counts;
};

/// Optional per-round initial guess; receives the round index and the current state.
template <Field S>
using InitialGuessHook = std::function<Vector<S>(int, const DeflationState<S>&)>;

/// Solve, deflate the converged point, restart from x0; repeated `rounds` times.
template <Field S>
DeflationLoopResult<S> deflation_loop(Method method, const Problem<S>& problem, const Vector<S>& x0,
                                      const SolverConfig& config, const DeflationConfig& deflation,
                                      const DeflationLoopOptions& options, InitialGuessHook<S> hook = {});

}  // namespace dgn
