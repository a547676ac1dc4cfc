#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgn/error.hpp"
#include "dgn/harness.hpp"

namespace {

dgn::ExperimentConfig build_config(const std::string& path, const std::vector<std::string>& overrides) {
    dgn::ExperimentConfig config = path.empty() ? dgn::ExperimentConfig{} : dgn::load_config(path);
    for (const auto& o : overrides) dgn::apply_override(config, o);
    return config;
}

void print_summary(const dgn::RunReport& report) {
    std::cout << report.problem << " / " << report.config.method << ": " << report.solutions.size()
              << " distinct solutions from " << report.rounds.size() << " rounds, " << report.counts.residual
              << " residual evaluations, " << report.wall_time << " s\n";
    for (const auto& r : report.rounds) {
        if (r.status != "converged" && report.config.method != "multistart") {
            std::cout << "  round " << r.round << ": " << r.status << (r.message.empty() ? "" : " (" + r.message + ")")
                      << '\n';
        }
    }
    if (!report.output_dir.empty()) std::cout << "  output: " << report.output_dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deflated Newton and Gauss-Newton experiments"};
    app.require_subcommand(1);

    std::string run_config;
    std::vector<std::string> run_sets;
    auto* run = app.add_subcommand("run", "run one experiment");
    run->add_option("config", run_config, "JSON config file (defaults apply when omitted)");
    run->add_option("--set", run_sets, "override a config key, key=value")->allow_extra_args(false);

    std::vector<std::string> compare_configs;
    std::vector<std::string> compare_sets;
    std::string compare_out;
    bool parallel = false;
    auto* compare = app.add_subcommand("compare", "run several configs on one problem and align their discoveries");
    compare->add_option("configs", compare_configs, "JSON config files")->required();
    compare->add_option("--set", compare_sets, "override applied to every config, key=value")
        ->allow_extra_args(false);
    compare->add_option("--out", compare_out, "comparison CSV path (default <output root>/comparison.csv)");
    compare->add_flag("--parallel", parallel, "run the configs concurrently");

    std::string beta_config;
    std::vector<std::string> beta_sets;
    auto* beta = app.add_subcommand("beta-field", "evaluate beta and its regions on a grid");
    beta->add_option("config", beta_config, "JSON config file");
    beta->add_option("--set", beta_sets, "override a config key, key=value")->allow_extra_args(false);

    auto* list_problems = app.add_subcommand("list-problems", "list registered problems");
    auto* list_methods = app.add_subcommand("list-methods", "list registered methods");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto report = dgn::run_experiment(build_config(run_config, run_sets));
            print_summary(report);
            return report.success() ? 0 : 2;
        }
        if (*compare) {
            std::vector<dgn::ExperimentConfig> configs;
            for (const auto& path : compare_configs) configs.push_back(build_config(path, compare_sets));
            const auto comparison = dgn::compare_methods(configs, parallel);
            std::filesystem::path out_path = compare_out;
            if (out_path.empty()) out_path = dgn::resolve_output_dir(configs.front()).parent_path() / "comparison.csv";
            if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
            std::ofstream out(out_path);
            if (!out) throw dgn::Error("cannot write " + out_path.string());
            dgn::write_comparison_csv(out, comparison);
            for (const auto& r : comparison.reports) print_summary(r);
            std::cout << "comparison: " << out_path.string() << '\n';
            return 0;
        }
        if (*beta) {
            const auto config = build_config(beta_config, beta_sets);
            const auto report = dgn::emit_beta_field(config);
            std::cout << "beta field over " << report.deflated_points.size() << " deflated points: "
                      << report.csv_path.string() << '\n';
            return 0;
        }
        if (*list_problems) {
            for (const auto& e : dgn::problem_registry()) std::cout << e.name << "\t" << e.description << '\n';
            return 0;
        }
        if (*list_methods) {
            for (const auto& e : dgn::method_registry()) std::cout << e.name << "\t" << e.description << '\n';
            return 0;
        }
    } catch (const dgn::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
