// Headless mission runner: run, compare, dump-scenario.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "semnbv/config.hpp"
#include "semnbv/runner.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s)
{
    std::vector<std::uint64_t> seeds;
    for (const auto& tok : split(s, ',')) {
        try {
            std::size_t used = 0;
            seeds.push_back(std::stoull(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw semnbv::ConfigError("bad seed '" + tok + "'");
        }
    }
    return seeds;
}

void print_summary(std::ostream& os, const semnbv::RunSummary& s, const std::vector<std::string>& classes)
{
    os << std::fixed << std::setprecision(3);
    os << "steps                 " << s.steps << '\n'
       << "entropy start/end     " << s.initial_entropy << " / " << s.final_entropy << '\n'
       << "avg gain per step     " << s.avg_information_gain << '\n'
       << "avg occupied per step " << s.avg_coverage << '\n';
    for (std::size_t k = 0; k < classes.size() && k < s.avg_per_class.size(); ++k)
        os << "  " << std::left << std::setw(20) << classes[k] << std::right << s.avg_per_class[k] << '\n';
    os << "avg planning ms       " << s.avg_planning_ms << '\n'
       << "avg fusion ms         " << s.avg_fusion_ms << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Semantic next-best-view exploration simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string modes;
    std::string seeds;

    auto* run = app.add_subcommand("run", "Run one exploration mission");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--seed", seed, "Override the rng seed");
    run->add_option("--out", out_dir, "Output directory (defaults to config output_dir)");

    auto* compare = app.add_subcommand("compare", "Run every mode x seed and tabulate averages");
    compare->add_option("--config", config_path, "Experiment config (JSON)")->required();
    compare->add_option("--modes", modes, "Comma-separated: baseline, geometric, semantic[:preset]")->required();
    compare->add_option("--seeds", seeds, "Comma-separated seeds")->required();
    compare->add_option("--out", out_dir, "Output directory (defaults to config output_dir)");

    auto* dump = app.add_subcommand("dump-scenario", "Print the fully resolved configuration");
    dump->add_option("--config", config_path, "Experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    semnbv::ExperimentConfig config;
    try {
        config = semnbv::load_config(config_path);
        if (seed) config.seed = *seed;
        if (!out_dir.empty()) config.output_dir = out_dir;
    } catch (const semnbv::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*dump) {
            std::cout << semnbv::config_to_json(config).dump(2) << '\n';
            return 0;
        }
        if (*run) {
            std::cerr << "running " << config.iterations << " iterations, mode "
                      << semnbv::to_string(config.planner.mode) << ", seed " << config.seed << '\n';
            const auto result = semnbv::run_mission(config, config.output_dir);
            print_summary(std::cout, result.summary, config.class_names());
            std::cout << "exploration complete  " << (result.exploration_complete ? "yes" : "no") << '\n'
                      << "artifacts             " << config.output_dir << '\n';
            return 0;
        }
        if (*compare) {
            const auto mode_list = split(modes, ',');
            const auto seed_list = parse_seeds(seeds);
            const auto rows = semnbv::compare_runs(config, mode_list, seed_list, config.output_dir);
            semnbv::write_comparison_csv(std::cout, rows, config.class_names());
            return 0;
        }
    } catch (const semnbv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
