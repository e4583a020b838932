#pragma once

#include "nhqm/builders.hpp"
#include "nhqm/io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nhqm {

struct Trace {
    std::string name;  // file suffix
    std::string csv;
};

struct ScenarioResult {
    json summary;
    std::vector<Trace> traces;
};

// diagonalize, evolve, berry, curvature, adiabatic, fock, gp
const std::vector<std::string>& scenario_kinds();

// Runs one scenario described by a JSON document. A top-level "sweep"
// {"key": "a.b", "values": [...]} repeats the scenario with config.a.b set to
// each value, concurrently on up to `threads` workers (0 reads NHQM_THREADS,
// falling back to the hardware concurrency); results keep the order of
// "values". Throws the library errors unchanged.
ScenarioResult run_scenario(const std::string& kind, const json& config, std::uint64_t seed = 0,
                            const BuilderRegistry& registry = BuilderRegistry::with_defaults(),
                            unsigned threads = 0);

// Exit-code taxonomy: 0 success, 1 input/config error, 2 physics error.
int exit_code_for(const std::exception& e);

}  // namespace nhqm
