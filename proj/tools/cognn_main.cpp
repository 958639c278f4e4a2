#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "cognn/commands.hpp"
#include "cognn/config.hpp"

namespace {

std::string keys_help() {
    std::string out = "\nConfig keys (key = value, # comments):\n";
    for (const auto& [key, doc] : cognn::config_keys()) out += "  " + key + ": " + doc + "\n";
    return out;
}

int exit_code(const cognn::Error& e) {
    if (dynamic_cast<const cognn::ConfigError*>(&e)) return 1;
    if (dynamic_cast<const cognn::NumericalError*>(&e)) return 3;
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online multi-agent forecasting with collaborative graphs"};
    app.footer(keys_help());
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "./out";
    std::optional<std::uint64_t> seed;
    std::string sweep = "eta";

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value config file")->required();
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "overrides the config seed");
    };
    auto* simulate = app.add_subcommand("simulate", "write simulated spring runs");
    auto* run = app.add_subcommand("run", "online learning over one stream");
    auto* sweep_cmd = app.add_subcommand("sweep", "one run per grid point");
    auto* score = app.add_subcommand("graph-score", "score graph snapshots against truth");
    for (auto* sub : {simulate, run, sweep_cmd, score}) common(sub);
    sweep_cmd->add_option("--sweep", sweep, "eta | num_copus")
        ->check(CLI::IsMember({"eta", "num_copus"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        auto kv = cognn::KeyValueConfig::load(config_path);
        if (seed) kv.set("seed", std::to_string(*seed));
        const cognn::ExperimentConfig config = cognn::experiment_from(kv);
        if (*simulate) cognn::cmd_simulate(config, out_dir, std::cout);
        else if (*run) cognn::cmd_run(config, out_dir, std::cout);
        else if (*sweep_cmd) cognn::cmd_sweep(config, cognn::parse_sweep_kind(sweep), out_dir, std::cout);
        else cognn::cmd_graph_score(config, out_dir, std::cout);
    } catch (const cognn::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
