// hypdrift command line: run, suite, list, describe, schema.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hypdrift/lab.hpp"

using namespace hypdrift;

namespace {

std::optional<std::string> env_out() {
    if (const char* v = std::getenv("HYPDRIFT_OUT"); v && *v)
        return std::string(v);
    return std::nullopt;
}

int cmd_run(const std::string& target, const std::string& out, std::optional<std::uint64_t> seed) {
    ExperimentConfig cfg;
    try {
        if (std::filesystem::exists(target))
            cfg = load_config(target);
        else
            cfg = builtin_config(target);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << target << " is neither a readable file nor a builtin config\n";
        return 1;
    }
    if (seed)
        cfg.seed = *seed;
    std::optional<std::string> dir = out.empty() ? env_out() : std::optional<std::string>(out);
    const RunOutput r = run_experiment(cfg, dir);
    if (r.exit_code == 1) {
        std::cerr << "error: " << r.error << '\n';
        return 1;
    }
    const auto& q = r.report.at("inequality");
    std::cout << cfg.name << " [" << cfg.fingerprint() << "]\n"
              << "  verdict  " << q.at("verdict").get<std::string>() << '\n'
              << "  gap      " << q.at("gap").get<double>() << " (sigma " << q.at("sigma").get<double>()
              << ")\n";
    if (q.contains("failing_component"))
        std::cout << "  failing  " << q.at("failing_component").get<std::string>() << '\n';
    for (const auto& f : r.files)
        std::cout << "  wrote    " << f << '\n';
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypdrift: random walks, Gibbs densities and the fundamental inequality"};
    app.require_subcommand(1);

    std::string target, out;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "run a config file or builtin config");
    run->add_option("config", target, "config.json or builtin name")->required();
    run->add_option("--out", out, "output directory (overrides config and HYPDRIFT_OUT)");
    run->add_option("--seed", seed, "master seed");

    std::string suite_out;
    std::optional<std::uint64_t> suite_seed;
    auto* suite = app.add_subcommand("suite", "run every suite config and print a pass/fail table");
    suite->add_option("--out", suite_out, "output directory (default suite-out)");
    suite->add_option("--seed", suite_seed, "master seed for every config");

    std::string kind;
    auto* list = app.add_subcommand("list", "list actions, measures, potentials or configs");
    list->add_option("kind", kind, "actions | measures | potentials | configs")->required();

    std::string name;
    auto* describe = app.add_subcommand("describe", "describe an action, potential or config");
    describe->add_option("name", name)->required();

    app.add_subcommand("schema", "print the config JSON schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*run)
            return cmd_run(target, out, seed);
        if (*suite) {
            std::string dir = suite_out.empty() ? env_out().value_or("suite-out") : suite_out;
            const auto rows = run_suite(dir, suite_seed);
            std::cout << suite_table(rows);
            for (const auto& r : rows)
                if (!r.pass)
                    return 1;
            return 0;
        }
        if (*list) {
            std::cout << list_text(kind);
            return 0;
        }
        if (*describe) {
            std::cout << describe_text(name);
            return 0;
        }
        std::cout << config_schema().dump(2) << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
