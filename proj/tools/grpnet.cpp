#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <CLI11.hpp>
#include <grpnet/cli/commands.hpp>

namespace {

using grpnet::cli::run_config;

/// Registers one option per config field and records their raw values.
void add_config_options(CLI::App& app, std::map<std::string, std::string>& raw, std::map<std::string, CLI::Option*>& opts)
{
    const run_config defaults;
    for (const auto& f : grpnet::cli::config_fields()) {
        if (f.key == "subcommand") continue;
        const auto name = grpnet::cli::flag_name(f.key);
        if (std::holds_alternative<bool run_config::*>(f.ptr)) {
            opts[f.key] = app.add_flag_callback(name, [&raw, key = f.key] { raw[key] = "true"; }, f.help);
            opts[f.key + "!"] = app.add_flag_callback("--no-" + name.substr(2), [&raw, key = f.key] { raw[key] = "false"; },
                                                      "disable " + name.substr(2));
        } else {
            auto* opt = app.add_option(name, raw[f.key], f.help);
            if (std::holds_alternative<double run_config::*>(f.ptr)) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%g", defaults.*std::get<double run_config::*>(f.ptr));
                opt->default_str(buf)->type_name("FLOAT");
            } else if (std::holds_alternative<std::string run_config::*>(f.ptr)) {
                opt->default_str(grpnet::cli::get_field(defaults, f));
            } else {
                opt->default_str(grpnet::cli::get_field(defaults, f))->type_name("UINT");
            }
            opts[f.key] = opt;
        }
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Group elastic net paths by block coordinate descent"};
    app.require_subcommand(1);
    const std::vector<std::pair<std::string, std::string>> subcommands = {
        {"fit", "fit a regularization path from CSV inputs"},
        {"simulate-group", "simulate the polynomial group design"},
        {"simulate-lasso", "simulate the equi-correlated lasso design"},
        {"bench", "time Gaussian group-lasso paths over an (n, rho) grid"},
        {"check-kkt", "certify the KKT residuals recorded in OUT/summary.json"},
    };
    std::map<std::string, std::map<std::string, std::string>> raw;
    std::map<std::string, std::map<std::string, CLI::Option*>> options;
    std::map<std::string, std::string> config_paths;
    for (const auto& [name, help] : subcommands) {
        auto* sub = app.add_subcommand(name, help);
        add_config_options(*sub, raw[name], options[name]);
        sub->add_option("--config", config_paths[name], "key=value or JSON config file (flags win)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << grpnet::cli::json_string(grpnet::cli::error_record("InvalidArgument", e.what()));
        return 1;
    }

    const auto* sub = app.get_subcommands().front();
    const auto& name = sub->get_name();
    run_config cfg;
    try {
        if (!config_paths[name].empty()) grpnet::cli::apply_config_file(cfg, config_paths[name]);
        cfg.subcommand = name;
        for (const auto& [key, value] : raw[name]) {
            const bool given = options[name][key]->count() > 0
                || (options[name].count(key + "!") && options[name][key + "!"]->count() > 0);
            if (given) grpnet::cli::set_field(cfg, grpnet::cli::find_field(key), value);
        }
    } catch (const grpnet::util::grpnet_error& e) {
        std::cerr << grpnet::cli::json_string(grpnet::cli::error_record(e.kind(), e.what()));
        return 1;
    }
    return grpnet::cli::run_command(cfg);
}
