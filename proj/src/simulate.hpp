#pragma once

#include "cue.hpp"
#include "data.hpp"
#include "keyvalue.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace magic {

enum class Scenario { I, II, III, IV, Custom };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// Y = D beta + sum_j pi_j Z_j [+ sum_{j<k} phi_jk Z_j Z_k] + eps
// D = sum_j theta_j Z_j + sum_{j<k} alpha Z_j Z_k + nu,  alpha = c / sqrt(n)
// Z_j ~ iid Bernoulli(mu), (eps, nu) ~ N2(0, Sigma).
//
// Scenario I:  theta = 1, first ceil(30% p) instruments have pi = 0.2.
// Scenario II: theta = 1, ceil(20% p) each with pi = 0.2, 0.4, 0.6.
// Scenario III / custom: theta ~ N(theta_mean, theta_spread),
//              pi ~ N(pi_mean, pi_spread) for every instrument.
// Scenario IV: theta ~ N(theta_mean, theta_spread), first ceil(70% p) have
//              pi = theta / 2.
// The spreads are variances unless spread_is_variance is false.
// With center_interactions the products use (Z_j - mu)(Z_k - mu); the two
// codings differ only by terms linear in Z.
struct ScenarioConfig {
    Scenario scenario = Scenario::I;
    std::size_t p = 10;
    std::size_t n = 5000;
    int q = 2;
    double beta_true = 0.0;
    double c = 3.75;
    double mu = 0.5;
    double var_eps = 1.0;
    double var_nu = 1.0;
    double cov_eps_nu = 0.25;
    bool misspecify_alice = false;
    bool freeze_phi = false;  // draw the phi multipliers once instead of per replication
    double theta_mean = 1.0;
    double theta_spread = 1.0;
    double pi_mean = 0.2;
    double pi_spread = 0.2;
    bool spread_is_variance = true;
    bool center_interactions = true;
    std::uint64_t seed = 1;
};

void validate_config(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_kv(const KeyValues& kv);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

struct Truth {
    double beta = 0.0;
    Eigen::VectorXd pi;
    Eigen::VectorXd theta;
    double alpha = 0.0;   // common pairwise exposure interaction
    Eigen::MatrixXd phi;  // outcome interactions, upper triangle used
};

struct SimulatedData {
    Dataset data;
    Truth truth;
};

SimulatedData gen_dataset(const ScenarioConfig& cfg, std::uint64_t rep_index);

struct McSettings {
    std::size_t reps = 300;
    std::vector<std::string> methods{"magic", "tsls"};
    CueOptions cue;
    double alpha = 0.05;  // overidentification test level
    std::size_t ratio_j = 0;
    std::size_t ratio_k = 1;
    std::size_t workers = 1;  // execution only, never echoed
};

McSettings mc_settings_from_kv(const KeyValues& kv);
nlohmann::json mc_settings_to_json(const McSettings& s);

struct MethodSummary {
    std::string method;
    double abs_bias = 0.0;
    double sd = 0.0;
    double mean_se = 0.0;
    double coverage = 0.0;
    std::optional<double> overid_rejection_rate;
    double mean_f_stat = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
    std::string first_error;
};

struct McSummary {
    ScenarioConfig config;
    McSettings settings;
    std::size_t reps = 0;
    std::vector<MethodSummary> methods;
    double mean_f_stat = 0.0;
    std::size_t f_failures = 0;
    bool within_exclusion_limit = true;
};

// Replications run independently (in parallel with settings.workers) and are
// reduced in replication order, so the summary does not depend on the worker
// count.
McSummary run_monte_carlo(const ScenarioConfig& cfg, const McSettings& settings);

// Throws an Exclusions error if more than 5% of any method's replications failed.
void check_exclusions(const McSummary& summary);

nlohmann::json summary_to_json(const McSummary& summary);
std::string summary_table(const McSummary& summary);

}  // namespace magic
