#include "nhqm/builders.hpp"
#include "nhqm/errors.hpp"
#include "nhqm/io.hpp"
#include "nhqm/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

const char* error_kind(const std::exception& e) {
    using namespace nhqm;
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const StepTooLarge*>(&e)) return "StepTooLarge";
    if (dynamic_cast<const GaugeConflict*>(&e)) return "GaugeConflict";
    if (dynamic_cast<const NotClosed*>(&e)) return "NotClosed";
    if (dynamic_cast<const DimensionMismatch*>(&e)) return "DimensionMismatch";
    if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
    if (dynamic_cast<const InputError*>(&e)) return "InputError";
    if (dynamic_cast<const ExceptionalPoint*>(&e)) return "ExceptionalPoint";
    if (dynamic_cast<const PairingFailure*>(&e)) return "PairingFailure";
    if (dynamic_cast<const ModeTrackingLost*>(&e)) return "ModeTrackingLost";
    if (dynamic_cast<const BranchJump*>(&e)) return "BranchJump";
    if (dynamic_cast<const NonFinite*>(&e)) return "NonFinite";
    if (dynamic_cast<const NoConvergence*>(&e)) return "NoConvergence";
    if (dynamic_cast<const AdiabaticityViolated*>(&e)) return "AdiabaticityViolated";
    if (dynamic_cast<const ModeCollapse*>(&e)) return "ModeCollapse";
    if (dynamic_cast<const PhysicsError*>(&e)) return "PhysicsError";
    return "InputError";
}

void print_catalog(const nhqm::BuilderRegistry& reg, bool as_json) {
    if (as_json) {
        std::cout << nhqm::dump(reg.catalog());
        return;
    }
    for (const auto& b : reg.list()) {
        std::cout << b.name << " (" << (b.kind == nhqm::BuilderKind::matrix ? "matrix" : "potential")
                  << "): " << b.description << "\n";
        for (const auto& p : b.params) {
            std::cout << "    " << p.name << "  " << p.description;
            if (p.fallback) std::cout << " [default " << nhqm::format12(*p.fallback) << "]";
            else std::cout << " [required]";
            std::cout << "\n";
        }
        for (const auto& s : b.string_params) std::cout << "    " << s << "  string [required]\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Biorthogonal canonical-field toolkit for non-Hermitian Hamiltonians"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_prefix;
    std::uint64_t seed = 0;
    std::vector<CLI::App*> kinds;
    for (const auto& kind : nhqm::scenario_kinds()) {
        auto* sub = app.add_subcommand(kind, "run a " + kind + " scenario");
        sub->add_option("--config", config_path, "scenario JSON file")->required();
        sub->add_option("--out", out_prefix, "prefix for <prefix>.json and <prefix>_<trace>.csv");
        sub->add_option("--seed", seed, "seed for randomized inputs");
        kinds.push_back(sub);
    }

    bool as_json = false;
    std::vector<std::string> registrations;
    auto* builders = app.add_subcommand("builders", "list Hamiltonian and potential builders");
    builders->add_flag("--json", as_json, "print the catalog as JSON");
    builders->add_option("--register", registrations, "NAME=FILE: add a matrix-file builder");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        nhqm::BuilderRegistry reg = nhqm::BuilderRegistry::with_defaults();
        if (builders->parsed()) {
            for (const auto& r : registrations) {
                const auto eq = r.find('=');
                if (eq == std::string::npos || eq == 0) {
                    throw nhqm::ConfigError("--register expects NAME=FILE, got '" + r + "'");
                }
                reg.register_matrix_file(r.substr(0, eq), r.substr(eq + 1));
            }
            print_catalog(reg, as_json);
            return 0;
        }
        for (auto* sub : kinds) {
            if (!sub->parsed()) continue;
            const nhqm::json config = nhqm::read_json_file(config_path);
            const auto result = nhqm::run_scenario(sub->get_name(), config, seed, reg);
            const std::string summary = nhqm::dump(result.summary);
            if (!out_prefix.empty()) {
                nhqm::write_text_file(out_prefix + ".json", summary);
                for (const auto& t : result.traces) {
                    nhqm::write_text_file(out_prefix + "_" + t.name + ".csv", t.csv);
                }
            }
            std::cout << summary;
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << error_kind(e) << ": " << e.what() << "\n";
        return nhqm::exit_code_for(e);
    }
    return 1;
}
