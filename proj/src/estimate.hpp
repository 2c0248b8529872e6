#pragma once

#include "baselines.hpp"
#include "cue.hpp"
#include "data.hpp"
#include "diagnostics.hpp"
#include "interactions.hpp"
#include "keyvalue.hpp"
#include "moments.hpp"
#include "nuisance.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace magic {

inline constexpr int kSchemaVersion = 1;

struct MagicFit {
    InteractionPlan plan;
    NuisanceEstimate nuisance;
    MomentComponents components;
    CueResult cue;
};

// Plan, nuisance projections, orthogonalized moments and the CUE fit.
MagicFit fit_magic(const Dataset& ds, int q, const CueOptions& options);

struct EstimateOptions {
    int q = 2;
    CueOptions cue;
    bool baselines = true;
    std::size_t ratio_j = 0;
    std::size_t ratio_k = 1;
    bool strict_binary = false;
};

// Reads q, b_lo, b_hi, grid_points, tol, ci_level, ridge, baselines,
// ratio_pair, strict_binary; other keys are left untouched.
EstimateOptions estimate_options_from_kv(const KeyValues& kv);
nlohmann::json estimate_options_to_json(const EstimateOptions& opts);

struct BaselineEntry {
    std::string method;
    std::optional<BaselineResult> result;
    std::string error;
};

struct EstimateReport {
    MagicFit fit;
    std::optional<FStatReport> f_stat;
    std::string f_stat_error;
    std::vector<BaselineEntry> baselines;
    double r2_over_n = 0.0;
    double r3_over_n = 0.0;
    std::size_t p = 0;
};

EstimateReport run_estimate(const Dataset& ds, const EstimateOptions& opts);

nlohmann::json report_to_json(const EstimateReport& report, const nlohmann::json& config_echo);

nlohmann::json baseline_to_json(const BaselineResult& b);

}  // namespace magic
