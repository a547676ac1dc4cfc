#include "dgn/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <sstream>

#include "dgn/error.hpp"
#include "dgn/problems.hpp"

namespace dgn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kMultistart = "multistart";

bool is_fe_problem(const std::string& name) {
    return name == "bratu" || name == "carrier";
}

std::string join_names(const std::vector<RegistryEntry>& entries) {
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0) out += ", ";
        out += entries[i].name;
    }
    return out;
}

void require_registered(const std::vector<RegistryEntry>& entries, const std::string& name, const char* what) {
    for (const auto& e : entries) {
        if (e.name == name) return;
    }
    throw ConfigError(std::string("unknown ") + what + " '" + name + "'; valid " + what + "s: " + join_names(entries));
}

/// Canonical short method name; long aliases are folded.
std::string canonical_method(const std::string& name) {
    if (name == kMultistart) return name;
    try {
        return std::string(to_string(method_from_string(name)));
    } catch (const ConfigError&) {
        throw ConfigError("unknown method '" + name + "'; valid methods: " + join_names(method_registry()));
    }
}

std::vector<double> parse_vector_literal(std::string_view text) {
    std::string body(text.substr(1, text.size() - 2));
    for (char& ch : body) {
        if (ch == ';' || ch == ',') ch = ' ';
    }
    std::istringstream in(body);
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
            throw ConfigError("initial_guess: cannot parse '" + token + "' as a number");
        }
        values.push_back(v);
    }
    if (values.empty()) throw ConfigError("initial_guess: empty vector");
    return values;
}

bool is_vector_literal(const std::string& s) {
    return s.size() >= 2 && s.front() == '[' && s.back() == ']';
}

Problem<double> make_real_problem(const ExperimentConfig& c) {
    if (c.problem == "himmelblau") return himmelblau();
    if (c.problem == "ftrig") return ftrig(c.ftrig_a);
    if (c.problem == "mn12") {
        if (c.mn12_planted.empty()) return mn12_problem(mn12_default_parameters());
        return mn12_problem(Eigen::Map<const RealVector>(c.mn12_planted.data(), 4));
    }
    throw ConfigError("problem '" + c.problem + "' is not real-valued");
}

Problem<Complex> make_complex_problem(const ExperimentConfig& c) {
    if (c.problem == "bratu") return bratu_problem(c.fe_n, c.fe_m);
    if (c.problem == "carrier") return carrier_problem(c.fe_n, c.fe_m);
    throw ConfigError("problem '" + c.problem + "' is not complex-valued");
}

RealVector default_real_guess(const ExperimentConfig& c) {
    RealVector x(2);
    if (c.problem == "himmelblau") {
        x << 1.0, 1.0;
        return x;
    }
    if (c.problem == "ftrig") {
        x << 1.0, 3.0;
        return x;
    }
    RealVector planted = c.mn12_planted.empty() ? mn12_default_parameters()
                                                : RealVector(Eigen::Map<const RealVector>(c.mn12_planted.data(), 4));
    planted(kMn12B22) *= 0.5;
    return planted;
}

RealVector real_initial_guess(const ExperimentConfig& c, Index dim) {
    const std::string& g = c.initial_guess;
    RealVector x;
    if (g == "default") {
        x = default_real_guess(c);
    } else if (g == "zero") {
        x = RealVector::Zero(dim);
    } else if (is_vector_literal(g)) {
        const auto v = parse_vector_literal(g);
        x = Eigen::Map<const RealVector>(v.data(), static_cast<Index>(v.size()));
    } else {
        throw ConfigError("initial_guess '" + g + "' is not available for " + c.problem +
                          " (expected default, zero or a vector like [1;3])");
    }
    if (x.size() != dim) {
        throw ConfigError("initial_guess has " + std::to_string(x.size()) + " entries, " + c.problem + " needs " +
                          std::to_string(dim));
    }
    return x;
}

ComplexVector complex_initial_guess(const ExperimentConfig& c, Index dim) {
    const std::string& g = c.initial_guess;
    ComplexVector x;
    if (g == "default" || g == "zero" || g == "x(1-x)") {
        x = fe_initial_guess(FourierExtensionGrid(c.fe_n, c.fe_m), g == "default" ? "zero" : g);
    } else if (is_vector_literal(g)) {
        const auto v = parse_vector_literal(g);
        x = Eigen::Map<const RealVector>(v.data(), static_cast<Index>(v.size())).cast<Complex>();
    } else {
        throw ConfigError("initial_guess '" + g + "' is not available for " + c.problem +
                          " (expected default, zero, x(1-x) or an explicit coefficient vector)");
    }
    if (x.size() != dim) {
        throw ConfigError("initial_guess has " + std::to_string(x.size()) + " entries, " + c.problem + " needs " +
                          std::to_string(dim));
    }
    return x;
}

// ---------------------------------------------------------------------------
// output

json counts_json(const EvalCounts& c) {
    return {{"residual", c.residual}, {"jacobian", c.jacobian}, {"hessian", c.hessian}};
}

json number_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

template <Field S>
void write_trace(const fs::path& path, const SolveResult<S>& result, Index num_params) {
    std::ofstream out = open_output(path);
    const bool with_x = !is_complex_v<S> && num_params <= 8;
    out << "k,residual_norm,objective,grad_norm,step_norm,beta,eta_dot_p,branch,alpha,omega,eta_dot_step,slope,"
           "objective_after";
    if (with_x) {
        for (Index i = 0; i < num_params; ++i) out << ",x" << i;
    }
    out << '\n';
    for (const auto& r : result.trace) {
        out << r.k << ',' << format_double(r.residual_norm) << ',' << format_double(r.objective) << ','
            << format_double(r.grad_norm) << ',' << format_double(r.step_norm) << ',' << format_double(r.beta) << ','
            << format_double(r.eta_dot_p) << ',' << to_string(r.branch) << ',' << format_double(r.alpha) << ','
            << format_double(r.omega) << ',' << format_double(r.eta_dot_step) << ',' << format_double(r.slope) << ','
            << format_double(r.objective_after);
        if (with_x) {
            for (Index i = 0; i < num_params; ++i) out << ',' << format_double(std::real(r.x(i)));
        }
        out << '\n';
    }
}

void write_grid_values(const fs::path& path, const FourierExtensionGrid& grid, const ComplexVector& c) {
    std::ofstream out = open_output(path);
    const ComplexVector u = grid.evaluate(c);
    out << "node,re_u,im_u\n";
    for (Index k = 0; k < grid.num_nodes(); ++k) {
        out << format_double(grid.node(k)) << ',' << format_double(u(k).real()) << ',' << format_double(u(k).imag())
            << '\n';
    }
}

void write_discoveries(const fs::path& path, const std::vector<DiscoveryRow>& rows) {
    std::ofstream out = open_output(path);
    out << "discovery,source,iterations,residual_evals,jacobian_evals\n";
    for (const auto& d : rows) {
        out << d.discovery << ',' << d.source << ',' << d.iterations << ',' << d.residual_evals << ','
            << d.jacobian_evals << '\n';
    }
}

template <Field S>
SolutionSummary summarize(const Solution<S>& s, int index) {
    SolutionSummary out;
    out.index = index;
    out.origin = s.origin;
    out.x.reserve(static_cast<std::size_t>(s.x.size()));
    for (Index i = 0; i < s.x.size(); ++i) out.x.emplace_back(s.x(i));
    out.residual_norm = s.residual_norm;
    out.objective = s.objective;
    out.grad_norm = s.grad_norm;
    out.iterations = s.iterations;
    return out;
}

template <Field S>
RoundSummary summarize(const RoundRecord<S>& r) {
    RoundSummary out;
    out.round = r.round;
    out.status = std::string(to_string(r.result.status));
    out.message = r.result.message;
    out.iterations = r.result.iterations;
    out.residual_norm = r.result.residual_norm;
    out.objective = r.result.objective;
    out.grad_norm = r.result.grad_norm;
    out.counts = r.result.counts;
    out.solution_index = r.solution_index;
    out.new_solution = r.new_solution;
    return out;
}

template <Field S>
void run_loop(RunReport& report, const Problem<S>& problem, const Vector<S>& x0, bool write_outputs) {
    const ExperimentConfig& c = report.config;
    DeflationLoopOptions options;
    options.rounds = c.rounds;
    options.stop_on_failure = c.stop_on_failure;
    const auto result = deflation_loop<S>(method_from_string(c.method), problem, x0, c.solver, c.deflation, options);

    EvalCounts cumulative;
    std::int64_t iterations = 0;
    for (const auto& r : result.rounds) {
        cumulative += r.result.counts;
        iterations += r.result.iterations;
        report.rounds.push_back(summarize(r));
        if (r.new_solution) {
            report.discoveries.push_back(DiscoveryRow{r.solution_index + 1, r.round, iterations,
                                                      cumulative.residual, cumulative.jacobian});
        }
    }
    for (std::size_t i = 0; i < result.solutions.size(); ++i) {
        report.solutions.push_back(summarize(result.solutions.items()[i], static_cast<int>(i)));
    }
    report.counts = result.counts;

    if (!write_outputs) return;
    if (c.write_traces) {
        for (const auto& r : result.rounds) {
            write_trace(report.output_dir / ("trace_round_" + std::to_string(r.round) + ".csv"), r.result,
                        problem.num_params);
        }
    }
    if constexpr (is_complex_v<S>) {
        const FourierExtensionGrid grid(c.fe_n, c.fe_m);
        for (std::size_t i = 0; i < result.solutions.size(); ++i) {
            write_grid_values(report.output_dir / ("solution_" + std::to_string(i) + ".csv"), grid,
                              result.solutions.items()[i].x);
        }
    }
}

void run_multistart(RunReport& report, const Problem<double>& problem, bool write_outputs) {
    const ExperimentConfig& c = report.config;
    MultistartConfig mc;
    mc.bounds = centered_box(problem.num_params, c.box_half_width);
    mc.n_starts = c.n_starts;
    mc.seed = c.seed;
    mc.solver = c.solver;
    mc.threads = c.threads;
    const auto result = multistart(problem, mc);

    std::int64_t iterations = 0;
    std::size_t next = 0;
    for (const auto& s : result.starts) {
        iterations += s.iterations;
        RoundSummary r;
        r.round = s.start;
        r.status = std::string(to_string(s.status));
        r.iterations = s.iterations;
        r.counts = s.counts;
        r.solution_index = s.solution_index;
        r.new_solution = s.new_solution;
        report.rounds.push_back(std::move(r));
        if (s.new_solution) {
            const auto& d = result.discoveries[next++];
            report.discoveries.push_back(DiscoveryRow{d.index, d.start, iterations, d.residual_evals, d.jacobian_evals});
        }
    }
    for (std::size_t i = 0; i < result.solutions.size(); ++i) {
        report.solutions.push_back(summarize(result.solutions.items()[i], static_cast<int>(i)));
    }
    report.counts = result.counts;

    if (!write_outputs) return;
    std::ofstream out = open_output(report.output_dir / "starts.csv");
    out << "start";
    for (Index i = 0; i < problem.num_params; ++i) out << ",x0_" << i;
    out << ",status,iterations,residual_evals,jacobian_evals,solution_index\n";
    for (const auto& s : result.starts) {
        out << s.start;
        for (Index i = 0; i < s.x0.size(); ++i) out << ',' << format_double(s.x0(i));
        out << ',' << to_string(s.status) << ',' << s.iterations << ',' << s.counts.residual << ','
            << s.counts.jacobian << ',' << s.solution_index << '\n';
    }
}

void check_int(const json& v, const char* key) {
    if (!v.is_number_integer()) throw ConfigError(std::string("config key '") + key + "' must be an integer");
}

}  // namespace

// ---------------------------------------------------------------------------
// config

void ExperimentConfig::validate() const {
    require_registered(problem_registry(), problem, "problem");
    canonical_method(method);
    if (rounds < 0) throw ConfigError("rounds must be nonnegative");
    solver.validate();
    deflation.validate();
    if (!(ftrig_a > 0.0) || !std::isfinite(ftrig_a)) throw ConfigError("ftrig_a must be positive");
    if (fe_n < 1) throw ConfigError("fe_n must be at least 1");
    if (fe_m < 2 * fe_n) throw ConfigError("fe_m must be at least 2 fe_n");
    if (!mn12_planted.empty() && mn12_planted.size() != 4) throw ConfigError("mn12_planted needs 4 entries");
    for (double v : mn12_planted) {
        if (!std::isfinite(v)) throw ConfigError("mn12_planted entries must be finite");
    }
    if (n_starts < 1) throw ConfigError("n_starts must be at least 1");
    if (!(box_half_width > 0.0) || !std::isfinite(box_half_width)) throw ConfigError("box_half_width must be positive");
    if (threads < 0) throw ConfigError("threads must be nonnegative");
    grid.validate();
    if (canonical_method(method) == kMultistart && is_fe_problem(problem)) {
        throw ConfigError("multistart needs a real-valued problem");
    }
    if (canonical_method(method) == "newton-opt" && problem != "ftrig") {
        throw ConfigError("newton-opt needs residual Hessians, available for ftrig only");
    }
}

json to_json(const ExperimentConfig& c) {
    return json{
        {"problem", c.problem},
        {"method", c.method},
        {"rounds", c.rounds},
        {"stop_on_failure", c.stop_on_failure},
        {"initial_guess", c.initial_guess},
        {"output_dir", c.output_dir},
        {"seed", c.seed},
        {"step_tol", c.solver.step_tol},
        {"max_iters", c.solver.max_iters},
        {"epsilon", c.solver.epsilon},
        {"min_norm_fallback", c.solver.min_norm_fallback},
        {"ls_c1", c.solver.line_search.c1},
        {"ls_alpha_min", c.solver.line_search.alpha_min},
        {"ls_max_trials", c.solver.line_search.max_trials},
        {"theta", c.deflation.theta},
        {"sigma", c.deflation.sigma},
        {"deflation_variant", std::string(to_string(c.deflation.variant))},
        {"ftrig_a", c.ftrig_a},
        {"fe_n", c.fe_n},
        {"fe_m", c.fe_m},
        {"mn12_planted", c.mn12_planted},
        {"n_starts", c.n_starts},
        {"box_half_width", c.box_half_width},
        {"threads", c.threads},
        {"grid_x_lo", c.grid.x_lo},
        {"grid_x_hi", c.grid.x_hi},
        {"grid_y_lo", c.grid.y_lo},
        {"grid_y_hi", c.grid.y_hi},
        {"grid_nx", c.grid.nx},
        {"grid_ny", c.grid.ny},
        {"write_traces", c.write_traces},
    };
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    const json defaults = to_json(c);
    for (const auto& [key, value] : j.items()) {
        if (!defaults.contains(key)) {
            std::string valid;
            for (const auto& [k, unused] : defaults.items()) valid += (valid.empty() ? "" : ", ") + k;
            throw ConfigError("unknown config key '" + key + "'; valid keys: " + valid);
        }
        const json& d = defaults.at(key);
        if (d.is_string() && !value.is_string()) {
            if (key == "initial_guess" && value.is_array()) continue;
            throw ConfigError("config key '" + key + "' must be a string");
        }
        if (d.is_boolean() && !value.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
        if (d.is_number() && !value.is_number()) throw ConfigError("config key '" + key + "' must be a number");
        if (d.is_number_integer()) check_int(value, key.c_str());
        if (d.is_array() && !value.is_array()) throw ConfigError("config key '" + key + "' must be an array");
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("problem", c.problem);
    get("method", c.method);
    get("rounds", c.rounds);
    get("stop_on_failure", c.stop_on_failure);
    if (j.contains("initial_guess")) {
        const json& g = j.at("initial_guess");
        if (g.is_array()) {
            std::string lit = "[";
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!g[i].is_number()) throw ConfigError("initial_guess entries must be numbers");
                lit += (i ? ";" : "") + format_double(g[i].get<double>());
            }
            c.initial_guess = lit + "]";
        } else {
            c.initial_guess = g.get<std::string>();
        }
    }
    get("output_dir", c.output_dir);
    get("seed", c.seed);
    get("step_tol", c.solver.step_tol);
    get("max_iters", c.solver.max_iters);
    get("epsilon", c.solver.epsilon);
    get("min_norm_fallback", c.solver.min_norm_fallback);
    get("ls_c1", c.solver.line_search.c1);
    get("ls_alpha_min", c.solver.line_search.alpha_min);
    get("ls_max_trials", c.solver.line_search.max_trials);
    get("theta", c.deflation.theta);
    get("sigma", c.deflation.sigma);
    if (j.contains("deflation_variant")) {
        c.deflation.variant = deflation_variant_from_string(j.at("deflation_variant").get<std::string>());
    }
    get("ftrig_a", c.ftrig_a);
    get("fe_n", c.fe_n);
    get("fe_m", c.fe_m);
    get("mn12_planted", c.mn12_planted);
    get("n_starts", c.n_starts);
    get("box_half_width", c.box_half_width);
    get("threads", c.threads);
    get("grid_x_lo", c.grid.x_lo);
    get("grid_x_hi", c.grid.x_hi);
    get("grid_y_lo", c.grid.y_lo);
    get("grid_y_hi", c.grid.y_hi);
    get("grid_nx", c.grid.nx);
    get("grid_ny", c.grid.ny);
    get("write_traces", c.write_traces);
    c.validate();
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError("override must look like key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json j = to_json(config);
    j[key] = value;
    config = config_from_json(j);
}

// ---------------------------------------------------------------------------
// registries

const std::vector<RegistryEntry>& problem_registry() {
    static const std::vector<RegistryEntry> entries = {
        {"himmelblau", "2x2 polynomial system with four real roots"},
        {"ftrig", "3x2 trigonometric-product least squares, 42 minima (parameter ftrig_a)"},
        {"bratu", "Bratu BVP, Fourier extension with 2 fe_n + 1 coefficients on fe_m + 1 nodes"},
        {"carrier", "Carrier BVP, same discretization as bratu"},
        {"mn12", "spin-10 inverse eigenvalue problem with planted parameters (mn12_planted)"},
    };
    return entries;
}

const std::vector<RegistryEntry>& method_registry() {
    static const std::vector<RegistryEntry> entries = {
        {"newton", "deflated Newton rootfinding (square systems)"},
        {"newton-opt", "deflated Newton on grad f = 0 with exact Hessian"},
        {"gauss-newton", "line-searched Gauss-Newton without deflation"},
        {"good-gn", "good deflated Gauss-Newton"},
        {"bad-gn", "bad deflated Gauss-Newton"},
        {kMultistart, "Gauss-Newton from n_starts uniform random starts in the box"},
    };
    return entries;
}

// ---------------------------------------------------------------------------
// runs

bool RunReport::success() const {
    for (const auto& r : rounds) {
        if (r.status == to_string(SolveStatus::Converged)) return true;
    }
    return false;
}

json RunReport::to_json() const {
    json rounds_json = json::array();
    for (const auto& r : rounds) {
        rounds_json.push_back({{"round", r.round},
                               {"status", r.status},
                               {"message", r.message},
                               {"iterations", r.iterations},
                               {"residual_norm", number_or_null(r.residual_norm)},
                               {"objective", number_or_null(r.objective)},
                               {"grad_norm", number_or_null(r.grad_norm)},
                               {"counts", counts_json(r.counts)},
                               {"solution_index", r.solution_index},
                               {"new_solution", r.new_solution}});
    }
    json solutions_json = json::array();
    for (const auto& s : solutions) {
        json x = json::array();
        for (const auto& v : s.x) {
            if (complex) {
                x.push_back(json::array({v.real(), v.imag()}));
            } else {
                x.push_back(v.real());
            }
        }
        solutions_json.push_back({{"index", s.index},
                                  {"origin", s.origin},
                                  {"x", x},
                                  {"residual_norm", s.residual_norm},
                                  {"objective", s.objective},
                                  {"grad_norm", s.grad_norm},
                                  {"iterations", s.iterations}});
    }
    json discoveries_json = json::array();
    for (const auto& d : discoveries) {
        discoveries_json.push_back({{"discovery", d.discovery},
                                    {"source", d.source},
                                    {"iterations", d.iterations},
                                    {"residual_evals", d.residual_evals},
                                    {"jacobian_evals", d.jacobian_evals}});
    }
    return json{{"schema_version", 1},
                {"config", dgn::to_json(config)},
                {"problem", {{"name", problem},
                             {"field", complex ? "complex" : "real"},
                             {"num_params", num_params},
                             {"num_residuals", num_residuals}}},
                {"method", config.method},
                {"rounds", rounds_json},
                {"solutions", solutions_json},
                {"discoveries", discoveries_json},
                {"counts", counts_json(counts)},
                {"wall_time_seconds", wall_time},
                {"success", success()}};
}

fs::path resolve_output_dir(const ExperimentConfig& config) {
    if (!config.output_dir.empty()) return config.output_dir;
    const char* root = std::getenv("DGN_OUTPUT_ROOT");
    const fs::path base = root != nullptr && *root != '\0' ? fs::path(root) : fs::path("dgn_runs");
    return base / (config.problem + "-" + canonical_method(config.method));
}

RunReport run_experiment(const ExperimentConfig& config, bool write_outputs) {
    config.validate();
    if (config.rounds < 1) throw ConfigError("rounds must be at least 1 to run an experiment");
    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.config = config;
    report.problem = config.problem;
    report.complex = is_fe_problem(config.problem);
    if (write_outputs) {
        report.output_dir = resolve_output_dir(config);
        fs::create_directories(report.output_dir);
    }
    const std::string method = canonical_method(config.method);
    if (report.complex) {
        const Problem<Complex> problem = make_complex_problem(config);
        report.num_params = problem.num_params;
        report.num_residuals = problem.num_residuals;
        run_loop<Complex>(report, problem, complex_initial_guess(config, problem.num_params), write_outputs);
    } else {
        const Problem<double> problem = make_real_problem(config);
        report.num_params = problem.num_params;
        report.num_residuals = problem.num_residuals;
        if (method == kMultistart) {
            run_multistart(report, problem, write_outputs);
        } else {
            run_loop<double>(report, problem, real_initial_guess(config, problem.num_params), write_outputs);
        }
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (write_outputs) {
        write_discoveries(report.output_dir / "discoveries.csv", report.discoveries);
        std::ofstream out = open_output(report.output_dir / "report.json");
        out << report.to_json().dump(2) << '\n';
    }
    return report;
}

Comparison compare_methods(const std::vector<ExperimentConfig>& configs, bool parallel, bool write_outputs) {
    if (configs.size() < 2) throw ConfigError("compare needs at least two configs");
    auto problem_key = [](const ExperimentConfig& c) {
        json j = to_json(c);
        return json{{"problem", j["problem"]}, {"ftrig_a", j["ftrig_a"]}, {"fe_n", j["fe_n"]},
                    {"fe_m", j["fe_m"]}, {"mn12_planted", j["mn12_planted"]}};
    };
    const json key = problem_key(configs.front());
    for (const auto& c : configs) {
        c.validate();
        if (problem_key(c) != key) {
            throw ConfigError("compare: all configs must use the same problem and problem parameters");
        }
    }

    std::vector<ExperimentConfig> members = configs;
    if (write_outputs) {
        std::map<std::string, int> seen;
        for (auto& c : members) {
            if (!c.output_dir.empty()) continue;
            const fs::path base = resolve_output_dir(c);
            const int n = seen[base.string()]++;
            c.output_dir = (n == 0 ? base : fs::path(base.string() + "-" + std::to_string(n))).string();
        }
    }

    Comparison out;
    if (parallel) {
        std::vector<std::future<RunReport>> futures;
        for (const auto& c : members) {
            futures.push_back(std::async(std::launch::async, [c, write_outputs] { return run_experiment(c, write_outputs); }));
        }
        for (auto& f : futures) out.reports.push_back(f.get());
    } else {
        for (const auto& c : members) out.reports.push_back(run_experiment(c, write_outputs));
    }

    std::map<std::string, int> label_count;
    for (const auto& r : out.reports) {
        std::string label = canonical_method(r.config.method);
        const int n = label_count[label]++;
        if (n > 0) label += "#" + std::to_string(n);
        for (const auto& d : r.discoveries) {
            out.rows.push_back(ComparisonRow{label, d.discovery, d.iterations, d.residual_evals, d.jacobian_evals});
        }
    }
    return out;
}

void write_comparison_csv(std::ostream& out, const Comparison& comparison) {
    out << "method,discovery,iterations,residual_evals,jacobian_evals\n";
    for (const auto& r : comparison.rows) {
        out << r.label << ',' << r.discovery << ',' << r.iterations << ',' << r.residual_evals << ','
            << r.jacobian_evals << '\n';
    }
}

std::string_view to_string(BetaRegion region) {
    switch (region) {
        case BetaRegion::Green: return "green";
        case BetaRegion::Yellow: return "yellow";
        case BetaRegion::Red: return "red";
        case BetaRegion::Undefined: return "undefined";
    }
    return "undefined";
}

BetaRegion classify_beta(std::optional<double> beta, double epsilon) {
    if (!beta) return BetaRegion::Undefined;
    if (*beta > 1.0 - epsilon) return BetaRegion::Green;
    if (*beta > 0.0) return BetaRegion::Yellow;
    return BetaRegion::Red;
}

BetaFieldReport emit_beta_field(const ExperimentConfig& config, bool write_outputs) {
    config.validate();
    if (is_fe_problem(config.problem)) throw ConfigError("beta-field needs a two-parameter real problem");
    const Problem<double> problem = make_real_problem(config);
    if (problem.num_params != 2) throw ConfigError("beta-field needs a two-parameter real problem");
    if (canonical_method(config.method) == kMultistart) throw ConfigError("beta-field needs a deflation method");

    BetaFieldReport report;
    DeflationState<double> state(config.deflation, problem.metric);
    if (config.rounds > 0) {
        DeflationLoopOptions options;
        options.rounds = config.rounds;
        options.stop_on_failure = config.stop_on_failure;
        const auto loop = deflation_loop<double>(method_from_string(config.method), problem,
                                                 real_initial_guess(config, 2), config.solver, config.deflation,
                                                 options);
        state = loop.state;
    }
    report.deflated_points = state.points();
    report.field = beta_field(problem, state, config.grid);

    if (write_outputs) {
        const fs::path dir = resolve_output_dir(config);
        fs::create_directories(dir);
        report.csv_path = dir / "beta_field.csv";
        std::ofstream out = open_output(report.csv_path);
        out << "x,y,beta,region\n";
        const Grid2D& g = config.grid;
        for (Index j = 0; j < g.ny; ++j) {
            for (Index i = 0; i < g.nx; ++i) {
                const auto beta = report.field.at(i, j);
                out << format_double(g.x_at(i)) << ',' << format_double(g.y_at(j)) << ','
                    << (beta ? format_double(*beta) : std::string("nan")) << ','
                    << to_string(classify_beta(beta, config.solver.epsilon)) << '\n';
            }
        }
    }
    return report;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

}  // namespace dgn
