#pragma once

#include "moments.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace magic {

// Ridge levels tried when Omega-hat is numerically singular:
// 0, then 1e-10 .. 1e-4 (x10) times ridge_scale(mc).
double ridge_scale(const MomentComponents& mc);
std::vector<double> ridge_ladder(double scale);

// Cholesky of omega + ridge * I; empty when not positive definite to working
// precision (reciprocal condition below r * epsilon).
std::optional<Eigen::LLT<Eigen::MatrixXd>> factor_spd(const Eigen::MatrixXd& omega, double ridge);

struct ObjectiveValue {
    double value = 0.0;
    double ridge = 0.0;  // ridge actually applied
};

// Q(beta) = 1/2 g^T (Omega + ridge I)^{-1} g, escalating the ridge along the
// ladder if the requested level does not factor.
ObjectiveValue objective(const MomentComponents& mc, double beta, double ridge = 0.0);

struct ObjectiveDerivatives {
    double value = 0.0;
    double first = 0.0;
    double second = 0.0;
};

// Analytic Q, dQ/dbeta, d2Q/dbeta2 at a fixed ridge. Throws if the matrix
// does not factor at that ridge.
ObjectiveDerivatives objective_derivatives(const MomentComponents& mc, double beta, double ridge);

struct Bounds {
    double lo = -10.0;
    double hi = 10.0;
};

struct MinimizeResult {
    double beta_hat = 0.0;
    double q_min = 0.0;
    bool boundary_flag = false;
    double ridge = 0.0;
    std::size_t grid_failures = 0;  // grid points that did not factor at the chosen ridge
};

// Uniform grid search followed by golden-section refinement of the bracket
// around the grid minimum. Grid ties go to the smallest beta.
MinimizeResult minimize(const MomentComponents& mc, Bounds bounds = {}, int grid_points = 512,
                        double tol = 1e-9, double initial_ridge = 0.0);

struct VarianceResult {
    double v_hat = 0.0;
    double se = 0.0;
    double hessian = 0.0;
    Eigen::VectorXd d_hat;
    bool reliable = true;
};

// V = H^{-1} D^T Omega^{-1} D H^{-1}, se = sqrt(V / n).
VarianceResult variance(const MomentComponents& mc, double beta_hat, double ridge = 0.0);

struct OverIdResult {
    bool applicable = false;
    double j_stat = 0.0;
    int df = 0;
    double p_value = 0.0;
};

// J = 2 n Q(beta_hat) against chi-square with r - 1 degrees of freedom.
OverIdResult overid_test(Eigen::Index n, Eigen::Index r, double q_min);
OverIdResult overid_test(const MomentComponents& mc, double beta_hat, double q_min);

struct CueOptions {
    Bounds bounds;
    int grid_points = 512;
    double tol = 1e-9;
    double ci_level = 0.95;
    double ridge = 0.0;
};

struct CueResult {
    double beta_hat = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double ci_level = 0.95;
    OverIdResult overid;
    double q_min = 0.0;
    double hessian = 0.0;
    bool boundary_flag = false;
    bool ridge_used = false;
    double ridge = 0.0;
    bool reliable = true;
    Eigen::Index n = 0;
    Eigen::Index r = 0;
    std::vector<std::string> warnings;
};

CueResult fit_cue(const MomentComponents& mc, const CueOptions& options = {});

}  // namespace magic
