#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hashsimp/hashsimp.hpp"

namespace fs = std::filesystem;
using namespace hashsimp;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct RunOptions {
    std::string dataset;
    std::string target;
    std::string strategy;
    std::string strategies;
    std::string seed;
    std::string seeds;
    std::string out_dir = "results";
    std::size_t truncate_hash = 0;
    GpConfig config;
};

int run_command(const RunOptions& opt)
{
    std::vector<Strategy> strategies;
    std::vector<std::uint64_t> seeds;
    try {
        if (!opt.strategy.empty() && !opt.strategies.empty()) {
            throw ConfigError("--strategy and --strategies are mutually exclusive");
        }
        if (!opt.seed.empty() && !opt.seeds.empty()) {
            throw ConfigError("--seed and --seeds are mutually exclusive");
        }
        const auto& strategy_text = opt.strategy.empty() ? opt.strategies : opt.strategy;
        const auto& seed_text = opt.seed.empty() ? opt.seeds : opt.seed;
        strategies = experiment::parse_strategies(strategy_text.empty() ? "bottom_up" : strategy_text);
        seeds = experiment::parse_seeds(seed_text.empty() ? "0" : seed_text);
        opt.config.validate();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    Dataset dataset;
    try {
        dataset = load_csv(opt.dataset, opt.target);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    if (dataset.dropped_rows > 0) {
        std::cerr << "warning: dropped " << dataset.dropped_rows << " rows with non-finite values\n";
    }
    if (dataset.samples() < 4) {
        std::cerr << "error: dataset has " << dataset.samples() << " usable rows, need at least 4\n";
        return kExitData;
    }

    std::vector<experiment::RunSpec> specs;
    const auto name = fs::path(opt.dataset).stem().string();
    for (auto strategy : strategies) {
        for (auto seed : seeds) {
            specs.push_back({name, strategy, seed, opt.config, opt.truncate_hash});
        }
    }
    std::cout << "dataset " << name << ": " << dataset.samples() << " samples, " << dataset.features() << " features; "
              << specs.size() << " run(s)\n";
    try {
        experiment::run_all(dataset, specs, opt.out_dir, [](const experiment::RunSpec& spec, const RunResult& r) {
            for (const auto& c : r.collisions) {
                std::cerr << "warning: " << to_string(spec.strategy) << " seed " << spec.seed << ": terminals " << c.first << " and "
                          << c.second << " share a hash key\n";
            }
            std::cout << to_string(spec.strategy) << " seed " << spec.seed << ": test_mse=" << experiment::format_number(r.test_mse)
                      << " size=" << r.size << " complexity=" << r.complexity << " simplifications=" << r.total_simplifications
                      << " (" << experiment::format_number(r.wall_seconds) << " s)\n";
        });
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return EXIT_SUCCESS;
}

int aggregate_command(const std::string& dir)
{
    try {
        const auto result = experiment::aggregate(dir);
        for (const auto& u : result.unmatched) {
            std::cerr << "warning: no baseline run for " << u << ", skipped\n";
        }
        std::cout << result.medians_csv;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return EXIT_SUCCESS;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Symbolic regression with hash-based inexact simplification"};
    app.require_subcommand(1);

    RunOptions opt;
    auto* run = app.add_subcommand("run", "Run the evolutionary search for each (strategy, seed) pair");
    run->add_option("--dataset", opt.dataset, "CSV file with a header row")->required();
    run->add_option("--target", opt.target, "Target column name (default: last column)");
    run->add_option("--strategy", opt.strategy, "none, bottom_up or top_down");
    run->add_option("--strategies", opt.strategies, "Comma-separated strategies");
    run->add_option("--seed", opt.seed, "Seed");
    run->add_option("--seeds", opt.seeds, "Seed list or range, e.g. 0..29");
    run->add_option("--pop-size", opt.config.pop_size, "Population size")->capture_default_str();
    run->add_option("--generations", opt.config.generations, "Number of generations")->capture_default_str();
    run->add_option("--max-depth", opt.config.max_depth, "Maximum tree depth")->capture_default_str();
    run->add_option("--max-size", opt.config.max_size, "Maximum tree size (nodes)")->capture_default_str();
    run->add_option("--tolerance", opt.config.tolerance, "Simplification tolerance (MSE)")->capture_default_str();
    run->add_option("--hash-bits", opt.config.hash_bits, "SimHash length in bits")->capture_default_str();
    run->add_flag("--adaptive-hash", opt.config.adaptive_hash, "Double the hash length until terminals do not collide");
    run->add_option("--max-variadic-arity", opt.config.max_variadic_arity, "Maximum arity of add/multiply")->capture_default_str();
    run->add_option("--out-dir", opt.out_dir, "Output directory")->capture_default_str();
    run->add_option("--truncate-hash", opt.truncate_hash, "Show only the first N key bits in table dumps (0 = full)");

    std::string results_dir;
    auto* agg = app.add_subcommand("aggregate", "Pair runs by seed against the 'none' baseline and report relative changes");
    agg->add_option("results_dir", results_dir, "Directory produced by 'run'")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (run->parsed()) {
        return run_command(opt);
    }
    return aggregate_command(results_dir);
}
