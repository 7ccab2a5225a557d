#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "weakflow/cli.hpp"

using namespace weakflow::cli;

int main(int argc, char** argv) {
    CLI::App app{"Weak-value flow lines, polarimetric reconstruction and mode-theory checks"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir = "weakflow_out", format;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;

    const std::pair<Scenario, const char*> scenarios[] = {
        {Scenario::flow_lines, "Trace a bundle of flow lines behind the double slit"},
        {Scenario::measure, "Simulate analyzer records on a grid"},
        {Scenario::reconstruct, "Reconstruct weak values from records and compare flow lines"},
        {Scenario::modes_check, "Check the mode-theory identities"},
        {Scenario::photon_packet, "Detection profile and momentum of a one-photon wave packet"},
    };
    for (const auto& [s, help] : scenarios) {
        CLI::App* sub = app.add_subcommand(scenario_name(s), help);
        sub->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "RNG seed (overrides [run] seed)");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (overrides WEAKFLOW_THREADS and [run] threads)");
        sub->add_option("--format", format, "data format")->check(CLI::IsMember({"csv", "jsonl"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const auto scenario = parse_scenario(app.get_subcommands().front()->get_name());
    try {
        ScenarioConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
        Overrides flags;
        flags.seed = seed;
        flags.threads = threads;
        if (!format.empty()) flags.format = format == "csv" ? Format::csv : Format::jsonl;
        apply_overrides(cfg, flags, std::getenv("WEAKFLOW_THREADS"));
        const RunReport report = run(*scenario, cfg, out_dir);
        std::cout << report.summary << '\n';
        return report.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
