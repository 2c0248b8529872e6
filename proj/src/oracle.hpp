#pragma once

#include "interactions.hpp"
#include "keyvalue.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace magic {

struct TripleEffect {
    std::array<std::uint32_t, 3> index{};
    double coef = 0.0;
};

struct LatticePoint {
    Eigen::VectorXd z;
    double prob = 0.0;
};

// E[D|z] = theta'z + sum_{j<k} alpha_jk z_j z_k + sum triples
// E[Y|z] = beta E[D|z] + pi'z + sum_{j<k} phi_jk z_j z_k
// Instruments are independent Bernoulli(mu) unless an explicit support is given.
struct PopulationDgp {
    std::size_t p = 2;
    Eigen::VectorXd mu;
    double beta_true = 0.0;
    Eigen::VectorXd pi;
    Eigen::VectorXd theta;
    Eigen::MatrixXd alpha;  // upper triangle used
    Eigen::MatrixXd phi;    // upper triangle used; empty or zero when the outcome model is additive
    std::vector<TripleEffect> alpha3;  // order-3 exposure interactions
    std::vector<LatticePoint> support;  // optional dependent lattice
};

inline constexpr std::size_t kMaxOracleInstruments = 12;

// Zero effects, mu = 0.5, alpha = 0.
PopulationDgp make_dgp(std::size_t p);
void validate_dgp(const PopulationDgp& dgp);

std::vector<LatticePoint> lattice(const PopulationDgp& dgp);
// Marginal means of the lattice.
Eigen::VectorXd population_mean(const PopulationDgp& dgp);

double conditional_exposure(const PopulationDgp& dgp, const Eigen::VectorXd& z);
double conditional_outcome(const PopulationDgp& dgp, const Eigen::VectorXd& z);

// sum_z Pr(z) zbar(z) (E[Y|z] - beta E[D|z]), orders 2..q.
Eigen::VectorXd population_moment(const PopulationDgp& dgp, double beta, int q);
// Derivative of population_moment in beta, -E[zbar D].
Eigen::VectorXd population_derivative(const PopulationDgp& dgp, int q);
double population_beta(const PopulationDgp& dgp, int q);

// Exact population projection coefficients of E[Y|Z] and E[D|Z] on W_{k-1}.
struct PopulationNuisance {
    Eigen::VectorXd mu;
    Eigen::VectorXd theta;
    Eigen::VectorXd xi;
};
PopulationNuisance population_nuisance(const PopulationDgp& dgp, const InteractionPlan& plan, int k);

// Exact E[g_k] at a given nuisance value.
Eigen::VectorXd population_score(const PopulationDgp& dgp, const InteractionPlan& plan, int k, double beta,
                                 const PopulationNuisance& eta);

struct OrthogonalityReport {
    double max_abs_derivative = 0.0;
    int worst_order = 0;
    double worst_beta = 0.0;
    std::string worst_coordinate;
    std::vector<double> max_by_order;  // index k-2
};

OrthogonalityReport orthogonality_check(const PopulationDgp& dgp, int q, const std::vector<double>& beta_grid,
                                        double step);

// Moment change for perturbations h and 2h of the nuisance along direction
// (mu, theta, xi stacked); returns |change(2h)| / |change(h)|.
double perturbation_ratio(const PopulationDgp& dgp, int k, double beta, const Eigen::VectorXd& direction,
                          double h);

struct OracleCheckResult {
    double beta_recovered = 0.0;
    double beta_error = 0.0;
    double max_abs_derivative = 0.0;
    OrthogonalityReport orthogonality;
    bool beta_pass = false;
    bool orthogonality_pass = false;
    bool expect_orthogonality_failure = false;
    bool pass = false;
};

// fixture: "default" (p=2), "random" (seeded draws for p <= 12), "dependent" (correlated p=2 lattice).
PopulationDgp oracle_fixture(const KeyValues& kv, nlohmann::json& echo);
OracleCheckResult run_oracle_check(const PopulationDgp& dgp, int q, const std::vector<double>& beta_grid,
                                   double step, double beta_tol, double derivative_tol, bool expect_failure);
nlohmann::json oracle_result_to_json(const OracleCheckResult& r);
std::string oracle_result_text(const OracleCheckResult& r);

}  // namespace magic
