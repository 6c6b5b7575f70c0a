#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "hetnet/cli.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

hetnet::SystemParams load_params(const std::string &config_path) {
    if (config_path.empty())
        return hetnet::SystemParams{};
    return hetnet::SystemParams::load_file(config_path);
}

// Output goes to the file when given, to stdout otherwise; the human summary
// always goes to stderr so the CSV stream stays clean.
struct OutputTarget {
    std::ofstream file;
    std::ostream *stream = &std::cout;

    explicit OutputTarget(const std::string &path) {
        if (path.empty() || path == "-")
            return;
        file.open(path);
        if (!file)
            throw hetnet::ParseError("cannot open output file '" + path + "'");
        stream = &file;
    }
};

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Analysis engine and discrete-event simulator for a content-oriented "
                 "satellite-terrestrial network with cognitive spectrum sharing, "
                 "popularity-aware caching and overlaid D2D"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string output_path;
    app.add_option("--config", config_path, "JSON configuration file (defaults when omitted)");
    app.add_option("--output", output_path, "CSV output path ('-' or empty for stdout)");

    auto *analyze_cmd =
        app.add_subcommand("analyze", "Solve the analytic model and report every metric");

    auto *simulate_cmd =
        app.add_subcommand("simulate", "Run discrete-event replications and report "
                                       "per-replication and aggregate metrics");
    std::string policy = "pac";
    std::uint64_t seed = 1;
    int replications = 10;
    double horizon = 1200.0;
    simulate_cmd->add_option("--policy", policy, "Cache policy: pac|lru|fifo|random");
    simulate_cmd->add_option("--seed", seed, "Base seed; replication r uses seed + r");
    simulate_cmd->add_option("--replications", replications, "Number of replications");
    simulate_cmd->add_option("--horizon", horizon, "Simulated seconds per replication");

    auto *sweep_cmd = app.add_subcommand(
        "sweep", "Re-run the analysis (optionally plus simulation) over a parameter grid");
    std::string sweep_param;
    std::string sweep_values;
    bool sweep_sim = false;
    sweep_cmd->add_option("--sweep-param", sweep_param, "Config key to sweep (r_dev rebalances r_bs)")
        ->required();
    sweep_cmd->add_option("--sweep-values", sweep_values, "Comma-separated value list")
        ->required();
    sweep_cmd->add_flag("--simulate", sweep_sim, "Also simulate each sweep point");
    sweep_cmd->add_option("--policy", policy, "Cache policy for simulated points");
    sweep_cmd->add_option("--seed", seed, "Base seed for simulated points");
    sweep_cmd->add_option("--replications", replications, "Replications per sweep point");
    sweep_cmd->add_option("--horizon", horizon, "Simulated seconds per replication");

    CLI11_PARSE(app, argc, argv);

    try {
        const hetnet::SystemParams params = load_params(config_path);
        OutputTarget out(output_path);

        if (analyze_cmd->parsed()) {
            hetnet::run_analyze(params, *out.stream, std::cerr);
        } else if (simulate_cmd->parsed()) {
            hetnet::SimulateOptions sim;
            sim.policy = hetnet::cache_policy_from_string(policy);
            sim.seed = seed;
            sim.replications = replications;
            sim.horizon_sec = horizon;
            hetnet::run_simulate(params, sim, *out.stream, std::cerr);
        } else if (sweep_cmd->parsed()) {
            hetnet::SweepSpec spec;
            spec.param = sweep_param;
            spec.values = hetnet::parse_value_list(sweep_values);
            spec.with_simulation = sweep_sim;
            spec.sim.policy = hetnet::cache_policy_from_string(policy);
            spec.sim.seed = seed;
            spec.sim.replications = replications;
            spec.sim.horizon_sec = horizon;
            hetnet::run_sweep(params, spec, *out.stream, std::cerr);
        }
    } catch (const hetnet::ValidationError &e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const hetnet::ParseError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const hetnet::NotIrreducibleError &e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const hetnet::SolverDivergedError &e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
