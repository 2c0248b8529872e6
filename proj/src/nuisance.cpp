#include "nuisance.hpp"

#include "error.hpp"

#include <string>

namespace magic {

namespace {
constexpr const char* kModule = "nuisance";
}

LeastSquares least_squares(const Eigen::MatrixXd& design, const Eigen::MatrixXd& rhs) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    // default threshold: epsilon * max(rows, cols) relative to the largest pivot
    LeastSquares out;
    out.rank = cod.rank();
    if (out.rank == 0) return out;
    out.coef = cod.solve(rhs);
    return out;
}

Eigen::VectorXd estimate_means(const Dataset& ds) { return ds.z.colwise().mean().transpose(); }

Projection project(const Dataset& ds, const InteractionPlan& plan, int k) {
    const auto dim = plan.basis_dim(k);
    if (dim > ds.n()) {
        throw data_error(kModule, "W_" + std::to_string(k - 1) + " design has " +
                                      std::to_string(dim) + " columns; need n >= " +
                                      std::to_string(dim) + " (n=" + std::to_string(ds.n()) + ")");
    }
    const Eigen::MatrixXd w = basis_matrix(ds.z, plan, k);
    Eigen::MatrixXd rhs(ds.y.size(), 2);
    rhs.col(0) = ds.y;
    rhs.col(1) = ds.d;
    auto ls = least_squares(w, rhs);
    if (ls.rank == 0)
        throw numerical_error(kModule, "W_" + std::to_string(k - 1) + " design has numerical rank 0");
    return {ls.coef.col(0), ls.coef.col(1), ls.rank};
}

NuisanceEstimate estimate_nuisance(const Dataset& ds, const InteractionPlan& plan) {
    NuisanceEstimate nuis;
    nuis.mu_hat = estimate_means(ds);
    const auto q = static_cast<std::size_t>(plan.q());
    nuis.theta.resize(q);
    nuis.xi.resize(q);
    nuis.design_rank.assign(q, 0);
    for (int k = 2; k <= plan.q(); ++k) {
        auto proj = project(ds, plan, k);
        const auto slot = static_cast<std::size_t>(k - 1);
        nuis.theta[slot] = std::move(proj.theta);
        nuis.xi[slot] = std::move(proj.xi);
        nuis.design_rank[slot] = proj.rank;
    }
    return nuis;
}

ResidualPair residuals(const Dataset& ds, const NuisanceEstimate& nuis,
                       const InteractionPlan& plan, int k) {
    if (!nuis.has_order(k))
        throw config_error(kModule, "no projection coefficients for order k=" + std::to_string(k));
    const auto slot = static_cast<std::size_t>(k - 1);
    const auto dim = static_cast<Eigen::Index>(plan.basis_dim(k));
    if (nuis.theta[slot].size() != dim || nuis.xi[slot].size() != dim)
        throw data_error(kModule, "coefficient length does not match W_" + std::to_string(k - 1));
    const Eigen::MatrixXd w = basis_matrix(ds.z, plan, k);
    ResidualPair out;
    out.order = k;
    out.r_y = ds.y - w * nuis.theta[slot];
    out.r_d = ds.d - w * nuis.xi[slot];
    return out;
}

}  // namespace magic
