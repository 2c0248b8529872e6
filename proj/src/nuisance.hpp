#pragma once

#include "data.hpp"
#include "interactions.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace magic {

// eta-hat = (mu-hat, theta_1, xi_1, ..., theta_{q-1}, xi_{q-1}).
// theta[k-1] / xi[k-1] hold the outcome / exposure coefficients on W_{k-1};
// index 0 is unused.
struct NuisanceEstimate {
    Eigen::VectorXd mu_hat;
    std::vector<Eigen::VectorXd> theta;
    std::vector<Eigen::VectorXd> xi;
    std::vector<Eigen::Index> design_rank;  // rank of the W_{k-1} design, same indexing

    bool has_order(int k) const {
        return k >= 2 && static_cast<std::size_t>(k - 1) < theta.size() &&
               theta[static_cast<std::size_t>(k - 1)].size() > 0;
    }
};

struct ResidualPair {
    Eigen::VectorXd r_y;
    Eigen::VectorXd r_d;
    int order = 0;
};

Eigen::VectorXd estimate_means(const Dataset& ds);

struct Projection {
    Eigen::VectorXd theta;  // outcome on W_{k-1}
    Eigen::VectorXd xi;     // exposure on W_{k-1}
    Eigen::Index rank = 0;
};

// Minimum-norm least squares of y and d on W_{k-1}(z) via a column-pivoted
// complete orthogonal decomposition.
Projection project(const Dataset& ds, const InteractionPlan& plan, int k);

NuisanceEstimate estimate_nuisance(const Dataset& ds, const InteractionPlan& plan);

ResidualPair residuals(const Dataset& ds, const NuisanceEstimate& nuis,
                       const InteractionPlan& plan, int k);

// Minimum-norm least squares coefficients for each column of rhs; shared by
// the baselines and diagnostics modules.
struct LeastSquares {
    Eigen::MatrixXd coef;
    Eigen::Index rank = 0;
};
LeastSquares least_squares(const Eigen::MatrixXd& design, const Eigen::MatrixXd& rhs);

}  // namespace magic
