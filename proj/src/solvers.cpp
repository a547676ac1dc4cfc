#include "dgn/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dgn/error.hpp"
#include "dgn/numerics.hpp"

namespace dgn {

namespace {

// |beta| below this leaves the deflated step undefined.
constexpr double kBetaFloor = 1e-14;
// Bad Gauss-Newton step weight floor.
constexpr double kOmegaFloor = 1e-28;
// Relative rounding allowance in the Armijo test.
constexpr double kArmijoSlack = 1e-14;

template <Field S>
class Evaluator {
public:
    Evaluator(const Problem<S>& problem, EvalCounts& counts) : problem_(problem), counts_(counts) {}

    Vector<S> residual(const Vector<S>& x) const {
        ++counts_.residual;
        return problem_.residual(x);
    }
    Matrix<S> jacobian(const Vector<S>& x) const {
        ++counts_.jacobian;
        return problem_.jacobian(x);
    }
    std::vector<Matrix<S>> hessians(const Vector<S>& x) const {
        ++counts_.hessian;
        return problem_.residual_hessians(x);
    }
    double objective(const Vector<S>& x) const {
        const Vector<S> r = residual(x);
        return r.allFinite() ? 0.5 * r.squaredNorm() : std::numeric_limits<double>::infinity();
    }

private:
    const Problem<S>& problem_;
    EvalCounts& counts_;
};

template <Field S>
void check_start(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config, const char* who) {
    config.validate();
    if (!problem.residual || !problem.jacobian) throw InvalidInputError(std::string(who) + ": problem is incomplete");
    if (x0.size() != problem.num_params) {
        throw ShapeError(std::string(who) + ": initial guess has length " + std::to_string(x0.size()) + ", expected " +
                         std::to_string(problem.num_params));
    }
    if (!x0.allFinite()) throw InvalidInputError(std::string(who) + ": non-finite initial guess");
}

template <Field S>
void fail(SolveResult<S>& result, SolveStatus status, std::string message) {
    result.status = status;
    result.message = std::move(message);
}

/// Final residual and gradient at result.x; not counted as solver work.
template <Field S>
void finish(const Problem<S>& problem, SolveResult<S>& result) {
    result.iterations = static_cast<int>(result.trace.size());
    const Vector<S> r = problem.residual(result.x);
    result.residual_norm = r.norm();
    result.objective = 0.5 * r.squaredNorm();
    try {
        result.grad_norm = (problem.jacobian(result.x).adjoint() * r).norm();
    } catch (const Error&) {
        result.grad_norm = std::numeric_limits<double>::quiet_NaN();
    }
}

/// Runs one iteration body, converting solver-level exceptions into statuses.
/// Returns false when the iteration ended the solve.
template <Field S, class Body>
bool guarded(SolveResult<S>& result, Body&& body) {
    try {
        return body();
    } catch (const RankDeficientError& e) {
        fail(result, SolveStatus::RankDeficient, e.what());
    } catch (const AtDeflatedPointError& e) {
        fail(result, SolveStatus::StepUndefined, e.what());
    } catch (const DegenerateEigenvalueError& e) {
        fail(result, SolveStatus::StepUndefined, e.what());
    } catch (const InvalidInputError& e) {
        // non-finite values reaching the linear algebra
        fail(result, SolveStatus::StepUndefined, e.what());
    }
    return false;
}

enum class GnVariant { Plain, Good, Bad };

template <Field S>
SolveResult<S> gn_family(GnVariant variant, const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                         const DeflationState<S>* state) {
    check_start(problem, x0, config, "gauss_newton");
    SolveResult<S> result;
    const Evaluator<S> eval(problem, result.counts);
    const bool deflating = variant != GnVariant::Plain && state != nullptr && !state->empty();
    const auto objective = [&](const Vector<S>& x) { return eval.objective(x); };

    Vector<S> x = x0;
    result.status = SolveStatus::MaxIters;
    for (int k = 0; k < config.max_iters; ++k) {
        const bool keep_going = guarded(result, [&] {
            IterationRecord<S> rec;
            rec.k = k;
            rec.x = x;
            const Vector<S> r = eval.residual(x);
            if (!r.allFinite()) {
                fail(result, SolveStatus::StepUndefined, "non-finite residual");
                return false;
            }
            const Matrix<S> jac = eval.jacobian(x);
            if (!jac.allFinite()) {
                fail(result, SolveStatus::StepUndefined, "non-finite Jacobian");
                return false;
            }
            std::optional<QrFactors<S>> factors;
            if (jac.rows() >= jac.cols()) factors.emplace(jac);
            if (!config.min_norm_fallback) {
                if (!factors) throw RankDeficientError("gauss_newton: fewer residuals than parameters");
                factors->require_full_rank("gauss_newton");
            }
            const Vector<S> minus_r = -r;
            const Vector<S> p = factors ? lsq_min_norm(*factors, minus_r) : lsq_min_norm<S>(jac, minus_r);
            const Vector<S> grad = jac.adjoint() * r;

            rec.residual_norm = r.norm();
            rec.objective = 0.5 * r.squaredNorm();
            rec.grad_norm = grad.norm();
            // Step length in the problem's metric (a norm; Euclidean unless the problem says otherwise).
            rec.step_norm = problem.metric.distance(p, Vector<S>::Zero(p.size()));

            Vector<S> g;
            if (deflating) {
                g = state->grad_eta(x);
                rec.eta_dot_p = real_inner(g, p);
                rec.beta = 1.0 - rec.eta_dot_p;
            }

            if (deflating && rec.eta_dot_p > config.epsilon) {
                rec.branch = Branch::Deflated;
                Vector<S> step;
                if (variant == GnVariant::Good) {
                    if (std::abs(rec.beta) < kBetaFloor) {
                        result.trace.push_back(rec);
                        fail(result, SolveStatus::StepUndefined, "beta vanishes on the deflated branch");
                        return false;
                    }
                    step = p / rec.beta;
                } else {
                    if (!factors) throw RankDeficientError("bad_deflated_gn: fewer residuals than parameters");
                    factors->require_full_rank("bad_deflated_gn");
                    const double pr_sq = apply_projector_complement(*factors, r).squaredNorm();
                    const Vector<S> normal_g = apply_normal_inverse(*factors, g);
                    const double pinv_g_sq = apply_pinv_transpose(*factors, g).squaredNorm();
                    rec.omega = pr_sq * pinv_g_sq + rec.beta * rec.beta;
                    if (!(rec.omega >= kOmegaFloor)) {
                        result.trace.push_back(rec);
                        fail(result, SolveStatus::StepUndefined, "omega vanishes on the deflated branch");
                        return false;
                    }
                    step = (rec.beta / rec.omega) * p - (pr_sq / rec.omega) * normal_g;
                    rec.eta_dot_step = real_inner(g, step);
                }
                rec.alpha = 1.0;
                x += step;
                result.trace.push_back(rec);
                return true;
            }

            rec.branch = Branch::Undeflated;
            rec.slope = real_inner(grad, p);
            if (rec.step_norm <= config.step_tol) {
                // Converged; keep the final step only if it does not increase f.
                rec.alpha = 0.0;
                rec.objective_after = rec.objective;
                if (rec.step_norm > 0.0) {
                    const double f_new = objective(Vector<S>(x + p));
                    if (armijo_satisfied(rec.objective, f_new, 1.0, rec.slope, config.line_search.c1)) {
                        rec.alpha = 1.0;
                        rec.objective_after = f_new;
                        x += p;
                    }
                }
                result.trace.push_back(rec);
                result.status = SolveStatus::Converged;
                return false;
            }
            const LineSearchResult ls =
                quadratic_line_search<S>(objective, x, p, rec.objective, rec.slope, config.line_search);
            if (!ls.success) {
                rec.alpha = ls.alpha;
                result.trace.push_back(rec);
                fail(result, SolveStatus::LineSearchFailed,
                     "no sufficient decrease after " + std::to_string(ls.trials) + " trials");
                return false;
            }
            rec.alpha = ls.alpha;
            rec.objective_after = ls.objective;
            x += ls.alpha * p;
            result.trace.push_back(rec);
            return true;
        });
        if (!keep_going) break;
    }
    result.x = x;
    finish(problem, result);
    return result;
}

template <Field S>
SolveResult<S> newton_root_impl(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                                const DeflationState<S>* state) {
    check_start(problem, x0, config, "newton_root");
    if (!problem.is_square()) throw InvalidInputError("newton_root: problem must be square");
    SolveResult<S> result;
    const Evaluator<S> eval(problem, result.counts);
    const bool deflating = state != nullptr && !state->empty();

    Vector<S> x = x0;
    for (int k = 0;; ++k) {
        const bool keep_going = guarded(result, [&] {
            const Vector<S> r = eval.residual(x);
            if (!r.allFinite()) {
                fail(result, SolveStatus::StepUndefined, "non-finite residual");
                return false;
            }
            if (r.norm() <= config.step_tol) {
                result.status = SolveStatus::Converged;
                return false;
            }
            if (k >= config.max_iters) {
                result.status = SolveStatus::MaxIters;
                return false;
            }
            const Matrix<S> jac = eval.jacobian(x);
            const QrFactors<S> factors(jac);
            factors.require_full_rank("newton_root");
            const Vector<S> p = factors.solve_least_squares(Vector<S>(-r));

            IterationRecord<S> rec;
            rec.k = k;
            rec.x = x;
            rec.residual_norm = r.norm();
            rec.objective = 0.5 * r.squaredNorm();
            rec.grad_norm = (jac.adjoint() * r).norm();
            rec.step_norm = p.norm();
            rec.alpha = 1.0;
            if (deflating) {
                rec.branch = Branch::Deflated;
                rec.eta_dot_p = real_inner(state->grad_eta(x), p);
                rec.beta = 1.0 - rec.eta_dot_p;
                if (std::abs(rec.beta) < kBetaFloor) {
                    result.trace.push_back(rec);
                    fail(result, SolveStatus::StepUndefined, "beta vanishes");
                    return false;
                }
            }
            x += p / rec.beta;
            result.trace.push_back(rec);
            return true;
        });
        if (!keep_going) break;
    }
    result.x = x;
    finish(problem, result);
    return result;
}

}  // namespace

void SolverConfig::validate() const {
    if (!(step_tol > 0.0) || !std::isfinite(step_tol)) throw ConfigError("step_tol must be positive");
    if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    if (!(line_search.c1 > 0.0 && line_search.c1 < 1.0)) throw ConfigError("line search c1 must lie in (0, 1)");
    if (!(line_search.alpha_min > 0.0 && line_search.alpha_min < 1.0)) {
        throw ConfigError("line search alpha_min must lie in (0, 1)");
    }
    if (line_search.max_trials < 1) throw ConfigError("line search max_trials must be at least 1");
}

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIters: return "max-iters";
        case SolveStatus::RankDeficient: return "rank-deficient";
        case SolveStatus::LineSearchFailed: return "line-search-failed";
        case SolveStatus::StepUndefined: return "step-undefined";
    }
    return "unknown";
}

std::string_view to_string(Branch branch) {
    return branch == Branch::Deflated ? "deflated" : "undeflated-linesearch";
}

std::string_view to_string(Method method) {
    switch (method) {
        case Method::NewtonRoot: return "newton";
        case Method::NewtonOpt: return "newton-opt";
        case Method::GaussNewton: return "gauss-newton";
        case Method::GoodGN: return "good-gn";
        case Method::BadGN: return "bad-gn";
    }
    return "unknown";
}

Method method_from_string(std::string_view name) {
    if (name == "newton" || name == "deflated_newton_root") return Method::NewtonRoot;
    if (name == "newton-opt" || name == "deflated_newton_opt") return Method::NewtonOpt;
    if (name == "gauss-newton" || name == "gauss_newton") return Method::GaussNewton;
    if (name == "good-gn" || name == "good_deflated_gn") return Method::GoodGN;
    if (name == "bad-gn" || name == "bad_deflated_gn") return Method::BadGN;
    throw ConfigError("unknown method '" + std::string(name) +
                      "' (expected newton, newton-opt, gauss-newton, good-gn or bad-gn)");
}

bool armijo_satisfied(double f0, double f_alpha, double alpha, double slope, double c1) {
    if (!std::isfinite(f_alpha)) return false;
    return f_alpha <= f0 + c1 * alpha * slope + kArmijoSlack * std::abs(f0);
}

LineSearchResult quadratic_line_search(const std::function<double(double)>& phi, double f0, double slope,
                                       const LineSearchConfig& config) {
    LineSearchResult out;
    double alpha = 1.0;
    while (out.trials < config.max_trials && alpha >= config.alpha_min) {
        const double f_alpha = phi(alpha);
        ++out.trials;
        if (armijo_satisfied(f0, f_alpha, alpha, slope, config.c1)) {
            out.success = true;
            out.alpha = alpha;
            out.objective = f_alpha;
            return out;
        }
        // Minimizer of q(t) = f0 + slope t + c t^2 through (alpha, f_alpha).
        double next = 0.1 * alpha;
        if (std::isfinite(f_alpha)) {
            const double curvature = f_alpha - f0 - slope * alpha;
            if (curvature > 0.0) next = -slope * alpha * alpha / (2.0 * curvature);
            else next = 0.5 * alpha;
        }
        alpha = std::clamp(next, 0.1 * alpha, 0.5 * alpha);
    }
    out.alpha = alpha;
    return out;
}

template <Field S>
SolveResult<S> newton_root(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config) {
    return newton_root_impl<S>(problem, x0, config, nullptr);
}

template <Field S>
SolveResult<S> deflated_newton_root(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                                    const DeflationState<S>& state) {
    return newton_root_impl<S>(problem, x0, config, &state);
}

SolveResult<double> deflated_newton_opt(const Problem<double>& problem, const RealVector& x0,
                                        const SolverConfig& config, const DeflationState<double>& state) {
    check_start(problem, x0, config, "deflated_newton_opt");
    if (!problem.has_hessians()) throw InvalidInputError("deflated_newton_opt: problem has no residual Hessians");
    SolveResult<double> result;
    const Evaluator<double> eval(problem, result.counts);

    RealVector x = x0;
    for (int k = 0;; ++k) {
        const bool keep_going = guarded(result, [&] {
            const RealVector r = eval.residual(x);
            if (!r.allFinite()) {
                fail(result, SolveStatus::StepUndefined, "non-finite residual");
                return false;
            }
            const RealMatrix jac = eval.jacobian(x);
            const RealVector grad = jac.transpose() * r;
            if (grad.norm() <= config.step_tol) {
                result.status = SolveStatus::Converged;
                return false;
            }
            if (k >= config.max_iters) {
                result.status = SolveStatus::MaxIters;
                return false;
            }
            const auto hessians = eval.hessians(x);
            if (static_cast<Index>(hessians.size()) != r.size()) {
                throw ShapeError("deflated_newton_opt: expected one Hessian per residual");
            }
            RealMatrix h = jac.transpose() * jac;
            for (Index i = 0; i < r.size(); ++i) h += r(i) * hessians[static_cast<std::size_t>(i)];
            const QrFactors<double> factors(h);
            if (!config.min_norm_fallback) factors.require_full_rank("deflated_newton_opt");
            const RealVector p = lsq_min_norm(factors, RealVector(-grad));

            IterationRecord<double> rec;
            rec.k = k;
            rec.x = x;
            rec.residual_norm = r.norm();
            rec.objective = 0.5 * r.squaredNorm();
            rec.grad_norm = grad.norm();
            rec.step_norm = p.norm();
            rec.alpha = 1.0;
            if (!state.empty()) {
                rec.branch = Branch::Deflated;
                rec.eta_dot_p = state.grad_eta(x).dot(p);
                rec.beta = 1.0 - rec.eta_dot_p;
                if (std::abs(rec.beta) < kBetaFloor) {
                    result.trace.push_back(rec);
                    fail(result, SolveStatus::StepUndefined, "beta vanishes");
                    return false;
                }
            }
            x += p / rec.beta;
            result.trace.push_back(rec);
            return true;
        });
        if (!keep_going) break;
    }
    result.x = x;
    finish(problem, result);
    return result;
}

template <Field S>
SolveResult<S> gauss_newton(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config) {
    return gn_family<S>(GnVariant::Plain, problem, x0, config, nullptr);
}

template <Field S>
SolveResult<S> good_deflated_gn(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                                const DeflationState<S>& state) {
    return gn_family<S>(GnVariant::Good, problem, x0, config, &state);
}

template <Field S>
SolveResult<S> bad_deflated_gn(const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                               const DeflationState<S>& state) {
    return gn_family<S>(GnVariant::Bad, problem, x0, config, &state);
}

template <Field S>
SolveResult<S> solve(Method method, const Problem<S>& problem, const Vector<S>& x0, const SolverConfig& config,
                     const DeflationState<S>& state) {
    switch (method) {
        case Method::NewtonRoot: return deflated_newton_root(problem, x0, config, state);
        case Method::NewtonOpt:
            if constexpr (std::same_as<S, double>) {
                return deflated_newton_opt(problem, x0, config, state);
            } else {
                throw InvalidInputError("newton-opt requires a real problem with residual Hessians");
            }
        case Method::GaussNewton: return gauss_newton(problem, x0, config);
        case Method::GoodGN: return good_deflated_gn(problem, x0, config, state);
        case Method::BadGN: return bad_deflated_gn(problem, x0, config, state);
    }
    throw InvalidInputError("solve: unknown method");
}

template <Field S>
SolutionSet<S>::SolutionSet(Metric<S> metric, double tol_scale, bool relative)
    : metric_(std::move(metric)), tol_scale_(tol_scale), relative_(relative) {
    if (!(tol_scale > 0.0)) throw InvalidInputError("SolutionSet: tolerance must be positive");
}

template <Field S>
std::optional<std::size_t> SolutionSet<S>::find(const Vector<S>& x) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const Vector<S>& y = items_[i].x;
        const double scale = relative_ ? 1.0 + metric_.distance(y, Vector<S>::Zero(y.size())) : 1.0;
        if (metric_.distance(x, y) <= tol_scale_ * scale) return i;
    }
    return std::nullopt;
}

template <Field S>
std::size_t SolutionSet<S>::add(Solution<S> solution, bool* inserted) {
    if (const auto match = find(solution.x)) {
        if (inserted != nullptr) *inserted = false;
        return *match;
    }
    items_.push_back(std::move(solution));
    if (inserted != nullptr) *inserted = true;
    return items_.size() - 1;
}

template <Field S>
DeflationLoopResult<S> deflation_loop(Method method, const Problem<S>& problem, const Vector<S>& x0,
                                      const SolverConfig& config, const DeflationConfig& deflation,
                                      const DeflationLoopOptions& options, InitialGuessHook<S> hook) {
    if (options.rounds < 1) throw ConfigError("deflation_loop: rounds must be at least 1");
    config.validate();
    DeflationLoopResult<S> out{SolutionSet<S>(problem.metric), {}, DeflationState<S>(deflation, problem.metric), {}};
    for (int round = 0; round < options.rounds; ++round) {
        const Vector<S> start = hook ? hook(round, out.state) : x0;
        RoundRecord<S> rec;
        rec.round = round;
        rec.result = solve(method, problem, start, config, out.state);
        out.counts += rec.result.counts;
        const bool converged = rec.result.converged();
        if (converged) {
            Solution<S> sol;
            sol.x = rec.result.x;
            sol.residual_norm = rec.result.residual_norm;
            sol.objective = rec.result.objective;
            sol.grad_norm = rec.result.grad_norm;
            sol.origin = round;
            sol.iterations = rec.result.iterations;
            sol.counts = rec.result.counts;
            rec.solution_index = static_cast<int>(out.solutions.add(std::move(sol), &rec.new_solution));
            out.state = out.state.with_point(rec.result.x);
        }
        out.rounds.push_back(std::move(rec));
        if (!converged && options.stop_on_failure) break;
    }
    return out;
}

#define DGN_INSTANTIATE_SOLVERS(S)                                                                                   \
    template SolveResult<S> newton_root<S>(const Problem<S>&, const Vector<S>&, const SolverConfig&);               \
    template SolveResult<S> deflated_newton_root<S>(const Problem<S>&, const Vector<S>&, const SolverConfig&,       \
                                                    const DeflationState<S>&);                                      \
    template SolveResult<S> gauss_newton<S>(const Problem<S>&, const Vector<S>&, const SolverConfig&);              \
    template SolveResult<S> good_deflated_gn<S>(const Problem<S>&, const Vector<S>&, const SolverConfig&,           \
                                                const DeflationState<S>&);                                          \
    template SolveResult<S> bad_deflated_gn<S>(const Problem<S>&, const Vector<S>&, const SolverConfig&,            \
                                               const DeflationState<S>&);                                           \
    template SolveResult<S> solve<S>(Method, const Problem<S>&, const Vector<S>&, const SolverConfig&,              \
                                     const DeflationState<S>&);                                                     \
    template class SolutionSet<S>;                                                                                   \
    template DeflationLoopResult<S> deflation_loop<S>(Method, const Problem<S>&, const Vector<S>&,                  \
                                                      const SolverConfig&, const DeflationConfig&,                  \
                                                      const DeflationLoopOptions&, InitialGuessHook<S>);

DGN_INSTANTIATE_SOLVERS(double)
DGN_INSTANTIATE_SOLVERS(Complex)

#undef DGN_INSTANTIATE_SOLVERS

}  // namespace dgn
