#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dgn/deflation.hpp"
#include "dgn/multistart.hpp"
#include "dgn/solvers.hpp"

namespace dgn {

/// Flat experiment description. Every field maps to one JSON key of the same name.
struct ExperimentConfig {
    std::string problem = "himmelblau";
    std::string method = "good-gn";
    int rounds = 1;
    bool stop_on_failure = true;
    /// "default", "zero", "x(1-x)" or an explicit vector such as "[1;3]".
    std::string initial_guess = "default";
    std::string output_dir;
    std::uint64_t seed = 0;

    SolverConfig solver;
    DeflationConfig deflation;

    // problem parameters
    double ftrig_a = 10.0;
    int fe_n = 100;
    int fe_m = 400;
    std::vector<double> mn12_planted;

    // multistart
    int n_starts = 300;
    double box_half_width = 10.0;
    int threads = 1;

    // beta field
    Grid2D grid;

    bool write_traces = true;

    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies "key=value"; the value is read as JSON when it parses, otherwise as a string.
void apply_override(ExperimentConfig& config, std::string_view assignment);

struct RegistryEntry {
    std::string name;
    std::string description;
};
const std::vector<RegistryEntry>& problem_registry();
/// Solver methods plus "multistart".
const std::vector<RegistryEntry>& method_registry();

struct RoundSummary {
    int round = 0;
    std::string status;
    std::string message;
    int iterations = 0;
    double residual_norm = 0.0;
    double objective = 0.0;
    double grad_norm = 0.0;
    EvalCounts counts;
    int solution_index = -1;
    bool new_solution = false;
};

struct SolutionSummary {
    int index = 0;
    /// Round or start that produced it.
    int origin = 0;
    std::vector<Complex> x;
    double residual_norm = 0.0;
    double objective = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
};

struct DiscoveryRow {
    int discovery = 0;
    /// Round (deflation) or start (multistart) of the discovery.
    int source = 0;
    /// Cumulative over all rounds or starts up to and including `source`.
    std::int64_t iterations = 0;
    std::int64_t residual_evals = 0;
    std::int64_t jacobian_evals = 0;
};

struct RunReport {
    ExperimentConfig config;
    std::string problem;
    bool complex = false;
    Index num_params = 0;
    Index num_residuals = 0;
    std::vector<RoundSummary> rounds;
    std::vector<SolutionSummary> solutions;
    std::vector<DiscoveryRow> discoveries;
    EvalCounts counts;
    double wall_time = 0.0;
    std::filesystem::path output_dir;

    /// True when at least one round (or start) converged.
    bool success() const;
    nlohmann::json to_json() const;
};

/// Directory a run writes to: config.output_dir if set, else $DGN_OUTPUT_ROOT (or ./dgn_runs)
/// joined with "<problem>-<method>".
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

/// Runs the configured deflation loop or multistart. With write_outputs, creates the
/// output directory and writes report.json, trace_round_<k>.csv, discoveries.csv and,
/// for Fourier-extension problems, solution_<i>.csv grid values.
RunReport run_experiment(const ExperimentConfig& config, bool write_outputs = true);

struct ComparisonRow {
    std::string label;
    int discovery = 0;
    std::int64_t iterations = 0;
    std::int64_t residual_evals = 0;
    std::int64_t jacobian_evals = 0;
};

struct Comparison {
    std::vector<RunReport> reports;
    std::vector<ComparisonRow> rows;
};

/// Runs every config (sequentially unless parallel) and aligns their discovery tables.
/// Needs at least two configs over the same problem and problem parameters.
Comparison compare_methods(const std::vector<ExperimentConfig>& configs, bool parallel = false,
                           bool write_outputs = true);
void write_comparison_csv(std::ostream& out, const Comparison& comparison);

enum class BetaRegion { Green, Yellow, Red, Undefined };
std::string_view to_string(BetaRegion region);
/// Green: beta > 1 - epsilon; yellow: 0 < beta <= 1 - epsilon; red: beta <= 0.
BetaRegion classify_beta(std::optional<double> beta, double epsilon);

struct BetaFieldReport {
    BetaField field;
    std::vector<RealVector> deflated_points;
    std::filesystem::path csv_path;
};

/// Runs `rounds` rounds of the configured method (none when rounds = 0), deflates the
/// converged points and evaluates beta on config.grid. Writes beta_field.csv with
/// columns x,y,beta,region when write_outputs is set.
BetaFieldReport emit_beta_field(const ExperimentConfig& config, bool write_outputs = true);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

}  // namespace dgn
