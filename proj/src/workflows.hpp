#pragma once

#include "keyvalue.hpp"

#include <json.hpp>

#include <string>

namespace magic {

// Keys: input, outcome (y), exposure (d), instruments (default: every other
// column) plus the estimation keys read by estimate_options_from_kv.
nlohmann::json estimate_workflow(const KeyValues& kv);

struct SimulateOutput {
    nlohmann::json summary;
    std::string table;
    std::string exclusion_error;  // non-empty when more than 5% of a method's replications failed
};

SimulateOutput simulate_workflow(const KeyValues& kv);

struct OracleOutput {
    nlohmann::json report;
    std::string text;
    bool pass = false;
};

// Keys: fixture, p, seed, beta_true, q, beta_grid, step, beta_tol,
// derivative_tol, expect_failure.
OracleOutput oracle_workflow(const KeyValues& kv);

}  // namespace magic
