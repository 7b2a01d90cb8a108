#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "wvfield/scenario/config.hpp"
#include "wvfield/scenario/runner.hpp"
#include "wvfield/types.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw wvf::ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> values;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        values.push_back(std::stod(tok));
    }
    return values;
}

void apply_overrides(wvf::scenario::ScenarioConfig& config, bool seed_set,
                     std::int64_t seed) {
    if (seed_set) config.seed = static_cast<std::uint64_t>(seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weak-value background-field laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, param, values_csv;
    std::int64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "scenario config file")
            ->required();
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--out-dir", out_dir, "output directory");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "execute one scenario");
    add_common(run_cmd);

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "run a scenario over parameter values");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--param", param, "parameter to sweep")->required();
    sweep_cmd->add_option("--values", values_csv, "comma-separated values")
        ->required();

    CLI::App* list_cmd =
        app.add_subcommand("list-scenarios", "list scenario kinds");

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "parse and check a config");
    validate_cmd->add_option("config", config_path, "scenario config file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            for (const auto& [kind, schema] :
                 wvf::scenario::scenario_schemas()) {
                std::cout << kind << "\n";
                for (const auto& [key, spec] : schema) {
                    const char* type = "";
                    switch (spec.type) {
                        case wvf::scenario::ParamType::Int: type = "int"; break;
                        case wvf::scenario::ParamType::Real: type = "real"; break;
                        case wvf::scenario::ParamType::Bool: type = "bool"; break;
                        case wvf::scenario::ParamType::String: type = "string"; break;
                        case wvf::scenario::ParamType::Complex: type = "complex"; break;
                        case wvf::scenario::ParamType::ComplexList:
                            type = "complex list";
                            break;
                    }
                    std::cout << "  " << key << " (" << type << ")\n";
                }
            }
            return 0;
        }

        if (validate_cmd->parsed()) {
            wvf::scenario::parse_config(read_file(config_path));
            std::cout << "config ok\n";
            return 0;
        }

        auto config = wvf::scenario::parse_config(read_file(config_path));
        apply_overrides(config, seed_set, seed);
        const std::string dir =
            wvf::scenario::resolve_out_dir(config, out_dir);

        wvf::scenario::RunManifest manifest;
        if (run_cmd->parsed()) {
            manifest = wvf::scenario::run_scenario(config, dir);
        } else {
            manifest = wvf::scenario::sweep_scenario(
                config, param, parse_values(values_csv), dir);
        }
        std::cout << (manifest.pass ? "pass" : "FAIL") << " ("
                  << manifest.outputs.size() << " outputs in "
                  << manifest.directory << ")\n";
        return manifest.pass ? 0 : 1;
    } catch (const wvf::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "scenario failed: " << e.what() << "\n";
        return 1;
    }
}
