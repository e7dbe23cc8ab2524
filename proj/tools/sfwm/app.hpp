#pragma once

// Command-line grammar:
//   sfwm modes     [--config FILE] [--key value ...]
//   sfwm jsi       [--config FILE] [--key value ...]
//   sfwm rates     [--config FILE] [--key value ...]
//   sfwm tags simulate|coincidences|g2h|fit-power [--config FILE] [--key value ...]
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 domain error (cutoff, non-convergence, invalid physics), 4 I/O error,
// 5 malformed input data.

#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

namespace sfwm::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitDomain = 3,
    kExitIo = 4,
    kExitData = 5,
};

inline std::string version_string() {
    return std::string("sfwm ") + kSoftwareVersion + " (config schema " + std::to_string(kSchemaVersion) + ")";
}

namespace detail {

struct Bound {
    CLI::App* app = nullptr;
    const Schema* schema = nullptr;
    std::function<void(const Config&, std::ostream&)> action;
    std::string config_path;
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flags;
};

inline void bind(Bound& b, CLI::App* app, const Schema& schema, std::function<void(const Config&, std::ostream&)> fn) {
    b.app = app;
    b.schema = &schema;
    b.action = std::move(fn);
    app->add_option("--config", b.config_path, "JSON config file (flat object of the keys below)");
    for (const auto& k : schema) {
        std::string text = k.help + " [" + type_name(k.type) + ", default " + k.default_value.dump() + "]";
        b.flags[k.name] = app->add_option("--" + k.name, b.flag_values[k.name], text);
    }
}

}  // namespace detail

/// Runs one command line; never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Photon-pair source modelling: fiber modes, joint spectra, rates and time-tag analysis", "sfwm"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    std::vector<std::unique_ptr<detail::Bound>> bound;
    auto add = [&](CLI::App* parent, const std::string& name, const std::string& help, const Schema& schema,
                   void (*fn)(const Config&, std::ostream&)) {
        auto b = std::make_unique<detail::Bound>();
        detail::bind(*b, parent->add_subcommand(name, help), schema, fn);
        bound.push_back(std::move(b));
    };
    add(&app, "modes", "effective-index table of one guided mode", modes_schema(), cmd_modes);
    add(&app, "jsi", "phase-matching, pump and joint spectral maps with marginals and Schmidt report", jsi_schema(),
        cmd_jsi);
    add(&app, "rates", "pair-rate budget under both loss readings", rates_schema(), cmd_rates);
    CLI::App* tags = app.add_subcommand("tags", "time-tag simulation and analysis");
    tags->require_subcommand(1);
    add(tags, "simulate", "synthetic pulsed pair source tag stream", simulate_schema(), cmd_simulate);
    add(tags, "coincidences", "coincidence histogram, peak, accidentals and CAR", coincidences_schema(),
        cmd_coincidences);
    add(tags, "g2h", "heralded autocorrelation versus herald separation", g2h_schema(), cmd_g2h);
    add(tags, "fit-power", "fit D + bP + aP^2 to a power scan", fit_power_schema(), cmd_fit_power);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitConfig;
    }

    for (const auto& b : bound) {
        if (!b->app->parsed()) continue;
        try {
            const Json document = b->config_path.empty() ? Json::object() : read_config_file(b->config_path);
            std::map<std::string, std::string> overrides;
            for (const auto& [name, opt] : b->flags)
                if (opt->count() > 0) overrides[name] = b->flag_values.at(name);
            const Config cfg = resolve_config(*b->schema, document, overrides);
            b->action(cfg, out);
            return kExitOk;
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << "\n";
            return kExitConfig;
        } catch (const IoError& e) {
            err << "I/O error: " << e.what() << "\n";
            return kExitIo;
        } catch (const ParseError& e) {
            err << "data error: " << e.what() << "\n";
            return kExitData;
        } catch (const NoGuidedMode& e) {
            err << "no guided mode: " << e.what() << "\n";
            return kExitDomain;
        } catch (const DomainError& e) {
            err << "domain error: " << e.what() << "\n";
            return kExitDomain;
        } catch (const ConvergenceError& e) {
            err << "solver did not converge: " << e.what() << "\n";
            return kExitDomain;
        } catch (const ValidationError& e) {
            err << "invalid parameters: " << e.what() << "\n";
            return kExitDomain;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kExitFailure;
        }
    }
    err << "no command given\n";
    return kExitConfig;
}

}  // namespace sfwm::cli
