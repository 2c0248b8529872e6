#include "workflows.hpp"

#include "data.hpp"
#include "error.hpp"
#include "estimate.hpp"
#include "oracle.hpp"
#include "simulate.hpp"

#include <charconv>
#include <cmath>

namespace magic {

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

std::vector<double> parse_reals(const std::vector<std::string>& items, const std::string& key) {
    std::vector<double> out;
    for (const auto& s : items) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
            throw config_error("oracle", key + ": cannot parse '" + s + "' as a finite number");
        out.push_back(v);
    }
    return out;
}

}  // namespace

nlohmann::json estimate_workflow(const KeyValues& kv) {
    const std::string input = kv.get_string("input", "");
    if (input.empty()) throw config_error("estimate", "missing required key 'input'");
    CsvBinding binding;
    binding.outcome = kv.get_string("outcome", "y");
    binding.exposure = kv.get_string("exposure", "d");
    binding.instruments = kv.get_list("instruments", {});
    const auto opts = estimate_options_from_kv(kv);
    kv.require_all_used("estimate");

    if (binding.instruments.empty()) {
        for (const auto& name : read_csv_header(input))
            if (name != binding.outcome && name != binding.exposure) binding.instruments.push_back(name);
    }
    const Dataset ds = load_csv(input, binding, opts.strict_binary);

    nlohmann::json echo = estimate_options_to_json(opts);
    echo["input"] = input;
    echo["outcome"] = binding.outcome;
    echo["exposure"] = binding.exposure;
    echo["instruments"] = join(binding.instruments);
    return report_to_json(run_estimate(ds, opts), echo);
}

SimulateOutput simulate_workflow(const KeyValues& kv) {
    const auto cfg = scenario_from_kv(kv);
    const auto settings = mc_settings_from_kv(kv);
    kv.require_all_used("simulate");
    const auto summary = run_monte_carlo(cfg, settings);
    SimulateOutput out;
    out.summary = summary_to_json(summary);
    out.table = summary_table(summary);
    try {
        check_exclusions(summary);
    } catch (const Error& e) {
        out.exclusion_error = e.what();
    }
    return out;
}

OracleOutput oracle_workflow(const KeyValues& kv) {
    nlohmann::json echo;
    const PopulationDgp dgp = oracle_fixture(kv, echo);
    const int q = static_cast<int>(kv.get_int("q", 2));
    const auto grid = parse_reals(kv.get_list("beta_grid", {"-2", "-1", "0", "1", "2"}), "beta_grid");
    const double step = kv.get_double("step", 1e-4);
    const double beta_tol = kv.get_double("beta_tol", 1e-12);
    const double derivative_tol = kv.get_double("derivative_tol", 1e-6);
    const bool expect_failure = kv.get_bool("expect_failure", echo["fixture"] == "dependent");
    kv.require_all_used("oracle-check");

    const auto result = run_oracle_check(dgp, q, grid, step, beta_tol, derivative_tol, expect_failure);
    echo["q"] = q;
    echo["beta_grid"] = join(kv.get_list("beta_grid", {"-2", "-1", "0", "1", "2"}));
    echo["step"] = step;
    echo["beta_tol"] = beta_tol;
    echo["derivative_tol"] = derivative_tol;
    echo["expect_failure"] = expect_failure;

    OracleOutput out;
    out.report = oracle_result_to_json(result);
    out.report["schema_version"] = kSchemaVersion;
    out.report["config"] = echo;
    out.text = oracle_result_text(result);
    out.pass = result.pass;
    return out;
}

}  // namespace magic
