#include <magic.h>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kNumericalError = 2, kExclusions = 3, kCheckFailed = 4 };

int exit_code(magic_status s) {
    switch (s) {
        case MAGIC_OK: return kOk;
        case MAGIC_ERR_NUMERICAL:
        case MAGIC_ERR_INTERNAL: return kNumericalError;
        case MAGIC_ERR_EXCLUSIONS: return kExclusions;
        default: return kInputError;
    }
}

int report_failure(const char* verb, magic_status s) {
    std::fprintf(stderr, "magic %s: %s: %s\n", verb, magic_status_name(s), magic_last_error());
    return exit_code(s);
}

struct Owned {
    char* p = nullptr;
    ~Owned() { magic_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

// Flag values collected as strings; only flags given on the command line
// become overrides.
struct Overrides {
    std::map<std::string, std::string> values;
    std::vector<std::string> sets;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option(flag, values[key], help);
        keys.emplace_back(flag, key);
    }

    std::string text(CLI::App* app) const {
        std::string out;
        for (const auto& [flag, key] : keys)
            if (app->count(flag) > 0) out += key + " = " + values.at(key) + "\n";
        for (const auto& s : sets) {
            if (s.find('=') == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + s + "'");
            out += s + "\n";
        }
        return out;
    }

    std::vector<std::pair<std::string, std::string>> keys;
};

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return true;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
}

// Base config file (optional) merged with overrides.
int compose(const char* verb, const std::string& config_path, const std::string& overrides, Owned& merged) {
    std::string base;
    if (!config_path.empty()) {
        auto text = read_file(config_path);
        if (!text) {
            std::fprintf(stderr, "magic %s: cannot read config file '%s'\n", verb, config_path.c_str());
            return kInputError;
        }
        base = *text;
    }
    const magic_status s = magic_config_merge(base.c_str(), overrides.c_str(), &merged.p);
    return s == MAGIC_OK ? kOk : report_failure(verb, s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MAGIC: interaction-moment CUE estimation with invalid instruments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(magic_version()));

    std::string config_path, output_path, table_path, emit_path;
    std::size_t workers = 1;
    std::uint64_t emit_rep = 0;

    auto* est = app.add_subcommand("estimate", "Fit the estimator to a CSV file and write result JSON");
    Overrides est_ov;
    est->add_option("--config", config_path, "key = value or JSON config file (a previous output works)");
    est->add_option("-o,--output", output_path, "Result JSON path (default stdout)");
    est_ov.add(est, "--input", "input", "CSV file");
    est_ov.add(est, "--outcome", "outcome", "Outcome column (default y)");
    est_ov.add(est, "--exposure", "exposure", "Exposure column (default d)");
    est_ov.add(est, "--instruments", "instruments", "Comma separated instrument columns (default all others)");
    est_ov.add(est, "--q", "q", "Highest interaction order (default 2)");
    est_ov.add(est, "--b-lo", "b_lo", "Lower parameter bound (default -10)");
    est_ov.add(est, "--b-hi", "b_hi", "Upper parameter bound (default 10)");
    est_ov.add(est, "--grid-points", "grid_points", "Grid size (default 512)");
    est_ov.add(est, "--tol", "tol", "Refinement tolerance (default 1e-9)");
    est_ov.add(est, "--ci-level", "ci_level", "Confidence level (default 0.95)");
    est_ov.add(est, "--ridge", "ridge", "Initial ridge (default 0)");
    est_ov.add(est, "--baselines", "baselines", "Also fit the baseline estimators (default true)");
    est_ov.add(est, "--ratio-pair", "ratio_pair", "Instrument pair for the ratio baseline (default 0,1)");
    est_ov.add(est, "--strict-binary", "strict_binary", "Require 0/1 instruments (default false)");
    est->add_option("--set", est_ov.sets, "Extra key=value override");

    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo study and write summary JSON and a table");
    Overrides sim_ov;
    sim->add_option("--config", config_path, "key = value or JSON config file (a previous output works)");
    sim->add_option("-o,--output", output_path, "Summary JSON path (default stdout)");
    sim->add_option("--table", table_path, "Text table path (default stderr, or stdout with --output)");
    sim->add_option("--workers", workers, "Worker threads (does not change results)")->check(CLI::PositiveNumber);
    sim->add_option("--emit-dataset", emit_path, "Write one simulated dataset as CSV instead of running the study");
    sim->add_option("--rep", emit_rep, "Replication index for --emit-dataset (default 0)");
    sim_ov.add(sim, "--scenario", "scenario", "I, II, III, IV or custom");
    sim_ov.add(sim, "--p", "p", "Number of instruments (default 10)");
    sim_ov.add(sim, "--n", "n", "Sample size (default 5000)");
    sim_ov.add(sim, "--q", "q", "Highest interaction order (default 2)");
    sim_ov.add(sim, "--c", "c", "Interaction strength (default 3.75)");
    sim_ov.add(sim, "--reps", "reps", "Replications (default 300)");
    sim_ov.add(sim, "--seed", "seed", "Seed (default 1)");
    sim_ov.add(sim, "--methods", "methods", "magic,tsls,ratio_pair,efficient_fixed_r (default magic,tsls)");
    sim_ov.add(sim, "--beta-true", "beta_true", "True effect (default 0)");
    sim_ov.add(sim, "--misspecify", "misspecify_alice", "Add outcome interactions (default false)");
    sim_ov.add(sim, "--freeze-phi", "freeze_phi", "Draw outcome interactions once (default false)");
    sim->add_option("--set", sim_ov.sets, "Extra key=value override");

    auto* orc = app.add_subcommand("oracle-check", "Exact population identification and orthogonality check");
    Overrides orc_ov;
    orc->add_option("--config", config_path, "key = value or JSON config file");
    orc->add_option("-o,--output", output_path, "Report JSON path (default: text report on stdout only)");
    orc_ov.add(orc, "--fixture", "fixture", "default, dependent or random");
    orc_ov.add(orc, "--p", "p", "Instruments for the random fixture (<= 12)");
    orc_ov.add(orc, "--q", "q", "Highest interaction order (default 2)");
    orc_ov.add(orc, "--seed", "seed", "Seed for the random fixture");
    orc_ov.add(orc, "--beta-true", "beta_true", "True effect (default 0.5)");
    orc_ov.add(orc, "--step", "step", "Finite-difference step (default 1e-4)");
    orc->add_option("--set", orc_ov.sets, "Extra key=value override");

    CLI11_PARSE(app, argc, argv);

    if (est->parsed()) {
        Owned cfg, json;
        if (int rc = compose("estimate", config_path, est_ov.text(est), cfg)) return rc;
        const magic_status s = magic_run_estimate(cfg.p, &json.p);
        if (s != MAGIC_OK) return report_failure("estimate", s);
        if (!write_output(output_path, json.str())) {
            std::fprintf(stderr, "magic estimate: cannot write '%s'\n", output_path.c_str());
            return kInputError;
        }
        return kOk;
    }

    if (sim->parsed()) {
        Owned cfg, json, table;
        if (int rc = compose("simulate", config_path, sim_ov.text(sim), cfg)) return rc;
        if (!emit_path.empty()) {
            magic_dataset* ds = nullptr;
            magic_status s = magic_simulate_dataset(cfg.p, emit_rep, &ds);
            if (s == MAGIC_OK) s = magic_dataset_write_csv(ds, emit_path.c_str());
            magic_dataset_free(ds);
            return s == MAGIC_OK ? kOk : report_failure("simulate", s);
        }
        const magic_status s = magic_run_simulate(cfg.p, workers, &json.p, &table.p);
        if (s != MAGIC_OK && s != MAGIC_ERR_EXCLUSIONS) return report_failure("simulate", s);
        if (!write_output(output_path, json.str())) {
            std::fprintf(stderr, "magic simulate: cannot write '%s'\n", output_path.c_str());
            return kInputError;
        }
        if (!table_path.empty()) {
            if (!write_output(table_path, table.str())) return kInputError;
        } else {
            std::fputs(table.str().c_str(), output_path.empty() || output_path == "-" ? stderr : stdout);
        }
        return s == MAGIC_OK ? kOk : report_failure("simulate", s);
    }

    Owned cfg, json, text;
    if (int rc = compose("oracle-check", config_path, orc_ov.text(orc), cfg)) return rc;
    int passed = 0;
    const magic_status s = magic_run_oracle_check(cfg.p, &json.p, &text.p, &passed);
    if (s != MAGIC_OK) return report_failure("oracle-check", s);
    std::fputs(text.str().c_str(), stdout);
    if (!output_path.empty() && !write_output(output_path, json.str())) return kInputError;
    return passed ? kOk : kCheckFailed;
}
