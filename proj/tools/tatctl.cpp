#include <iostream>

#include "CLI11.hpp"

#include "tat/cli.hpp"

using namespace tat;

int main(int argc, char** argv) {
    CLI::App app{"Limited-view thermoacoustic geometry, simulation and reconstruction"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tatctl format " + std::to_string(kFormatVersion));

    std::string config;
    std::vector<std::string> args;
    bool oracle = false;
    std::string checkOnly;
    fs::path reportOut;

    auto single = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("overrides", args, "key=value overrides, e.g. solver.t_max=2");
        return sub;
    };
    CLI::App* distance = single("distance", "eikonal distance with Lipschitz check");
    distance->add_flag("--oracle", oracle, "compare against the 16-neighbour Dijkstra oracle");
    distance->add_option("--check-only", checkOnly, "only check an existing distance field (file stem)");
    single("coverage", "decide Property (P) and the minimal observation time");
    single("simulate", "forward wave simulation and boundary traces");
    single("verify-dod", "exterior solve with data vanishing on the patch, measured on the domain of dependence");
    single("uc", "unique-continuation sets and their containment chain");
    single("reconstruct", "Landweber reconstruction from the simulated patch trace");
    CLI::App* report = app.add_subcommand("report", "collate reconstruct summaries of several configs");
    report->add_option("configs", args, "configs and key=value overrides")->required();
    report->add_option("--out", reportOut, "output directory (default: first config's output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kUsageError;
    }

    try {
        if (report->parsed()) {
            std::vector<std::string> overrides, files;
            for (const auto& a : args) (a.find('=') != std::string::npos ? overrides : files).push_back(a);
            if (files.empty()) throw cli::ConfigError("report needs at least one config file");
            std::vector<cli::ExperimentConfig> cfgs;
            for (const auto& f : files) cfgs.push_back(cli::load_config(f, overrides));
            return cli::cmd_report(cfgs, reportOut.empty() ? cfgs.front().output / "report" : reportOut, std::cout);
        }
        if (oracle) args.push_back("distance.oracle=true");
        if (!checkOnly.empty()) args.push_back("distance.check_field=\"" + checkOnly + "\"");
        const cli::ExperimentConfig cfg = cli::load_config(config, args);
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "distance") return cli::cmd_distance(cfg, std::cout);
        if (name == "coverage") return cli::cmd_coverage(cfg, std::cout);
        if (name == "simulate") return cli::cmd_simulate(cfg, std::cout);
        if (name == "verify-dod") return cli::cmd_verify_dod(cfg, std::cout);
        if (name == "uc") return cli::cmd_uc(cfg, std::cout);
        return cli::cmd_reconstruct(cfg, std::cout);
    } catch (const cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kUsageError;
    } catch (const cli::UpstreamError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kUsageError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return cli::kInvariantFailure;
    }
}
