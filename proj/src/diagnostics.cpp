#include "diagnostics.hpp"

#include "error.hpp"
#include "nuisance.hpp"

#include <cmath>

namespace magic {

namespace {
constexpr const char* kModule = "diagnostics";
}

FStatReport f_stat(const Dataset& ds, const InteractionPlan& plan) {
    const auto n = static_cast<Eigen::Index>(ds.n());
    const auto r = static_cast<Eigen::Index>(plan.r());
    if (n <= r + 1)
        throw data_error(kModule, "F statistic needs n > r + 1 (n=" + std::to_string(n) +
                                      ", r=" + std::to_string(r) + ")");

    FStatReport out;
    out.num_restrictions = plan.r();
    out.n_effective = ds.n();

    Eigen::MatrixXd x1(n, ds.z.cols() + 1);
    x1.col(0).setOnes();
    x1.rightCols(ds.z.cols()) = ds.z;
    const auto first = least_squares(x1, ds.d);
    const Eigen::VectorXd d_bar = ds.d - x1 * first.coef.col(0);

    const double spread = (ds.d.array() - ds.d.mean()).matrix().norm();
    if (d_bar.norm() <= 1e-10 * spread || spread == 0.0) return out;  // no residual variation

    Eigen::MatrixXd x(n, r + 1);
    x.col(0).setOnes();
    x.rightCols(r) = demeaned_matrix(ds.z, estimate_means(ds), plan);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols())
        throw data_error(kModule, "interaction design is rank deficient (rank " +
                                      std::to_string(qr.rank()) + " of " + std::to_string(x.cols()) + ")");
    const Eigen::VectorXd gamma = qr.solve(d_bar);
    const Eigen::VectorXd e = d_bar - x * gamma;

    const Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::MatrixXd bread = gram.llt().solve(Eigen::MatrixXd::Identity(r + 1, r + 1));
    const Eigen::MatrixXd xe = x.array().colwise() * e.array();
    const Eigen::MatrixXd meat = xe.transpose() * xe;
    const Eigen::MatrixXd v = bread * meat * bread;

    const Eigen::MatrixXd v_s = v.bottomRightCorner(r, r);
    const Eigen::VectorXd g_s = gamma.tail(r);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(v_s);
    if (ldlt.info() != Eigen::Success)
        throw numerical_error(kModule, "robust covariance of interaction coefficients is singular");
    const double wald = g_s.dot(ldlt.solve(g_s));
    out.f_value = std::max(wald, 0.0) / static_cast<double>(r);
    return out;
}

}  // namespace magic
