#include "moments.hpp"

#include "error.hpp"

#include <string>

namespace magic {

namespace {

constexpr const char* kModule = "moments";

Eigen::MatrixXd symmetric_gram(const Eigen::MatrixXd& x, double scale) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), scale);
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    return s;
}

}  // namespace

MomentComponents make_components(Eigen::MatrixXd a, Eigen::MatrixXd b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw data_error(kModule, "A and B must have equal shape");
    if (a.rows() < 1 || a.cols() < 1) throw data_error(kModule, "empty moment matrices");
    MomentComponents mc;
    const double inv_n = 1.0 / static_cast<double>(a.rows());
    mc.a_mean = a.colwise().mean().transpose();
    mc.b_mean = b.colwise().mean().transpose();
    mc.s_aa = symmetric_gram(a, inv_n);
    mc.s_bb = symmetric_gram(b, inv_n);
    mc.s_ab.noalias() = inv_n * (a.transpose() * b);
    mc.a = std::move(a);
    mc.b = std::move(b);
    return mc;
}

MomentComponents build_components(const Dataset& ds, const NuisanceEstimate& nuis,
                                  const InteractionPlan& plan) {
    if (ds.p() != plan.p() || static_cast<std::size_t>(nuis.mu_hat.size()) != plan.p())
        throw data_error(kModule, "dataset, nuisance and plan disagree on p");
    const auto n = static_cast<Eigen::Index>(ds.n());
    const auto r = static_cast<Eigen::Index>(plan.r());
    Eigen::MatrixXd a(n, r);
    Eigen::MatrixXd b(n, r);
    for (int k = 2; k <= plan.q(); ++k) {
        if (!nuis.has_order(k))
            throw data_error(kModule, "nuisance estimate missing order k=" + std::to_string(k));
        const auto res = residuals(ds, nuis, plan, k);
        const Eigen::MatrixXd zbar = demeaned_block(ds.z, nuis.mu_hat, plan, k);
        const auto off = static_cast<Eigen::Index>(plan.moment_offset(k));
        a.middleCols(off, zbar.cols()) = zbar.array().colwise() * res.r_y.array();
        b.middleCols(off, zbar.cols()) = zbar.array().colwise() * res.r_d.array();
    }
    return make_components(std::move(a), std::move(b));
}

Eigen::VectorXd gbar(const MomentComponents& mc, double beta) {
    return mc.a_mean - beta * mc.b_mean;
}

Eigen::MatrixXd omega(const MomentComponents& mc, double beta) {
    Eigen::MatrixXd cross = mc.s_ab + mc.s_ab.transpose();
    return mc.s_aa - beta * cross + (beta * beta) * mc.s_bb;
}

MomentSnapshot snapshot(const MomentComponents& mc, double beta) {
    return {gbar(mc, beta), omega(mc, beta), beta};
}

}  // namespace magic
