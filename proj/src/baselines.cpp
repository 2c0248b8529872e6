#include "baselines.hpp"

#include "cue.hpp"
#include "error.hpp"
#include "nuisance.hpp"

#include <cmath>
#include <sstream>

namespace magic {

namespace {

constexpr const char* kModule = "baselines";

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd x(z.rows(), z.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(z.cols()) = z;
    return x;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// Factor omega with the same ladder the CUE uses; returns the ridge used.
Eigen::LLT<Eigen::MatrixXd> factor_with_ladder(const Eigen::MatrixXd& omega, double& ridge) {
    const double r = static_cast<double>(omega.rows());
    double scale = omega.trace() / r;
    if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
    for (double level : ridge_ladder(scale)) {
        if (auto llt = factor_spd(omega, level)) {
            ridge = level;
            return std::move(*llt);
        }
    }
    throw numerical_error(kModule, "moment covariance is singular even after ridge escalation");
}

}  // namespace

std::string to_string(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::Tsls: return "tsls";
        case BaselineMethod::RatioPair: return "ratio_pair";
        case BaselineMethod::EfficientFixedR: return "efficient_fixed_r";
    }
    return "unknown";
}

BaselineResult tsls(const Dataset& ds) {
    const Eigen::MatrixXd zx = with_intercept(ds.z);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> first(zx);
    if (first.rank() < zx.cols())
        throw data_error(kModule, "TSLS first-stage design (1, Z) is rank deficient (rank " +
                                      std::to_string(first.rank()) + " of " +
                                      std::to_string(zx.cols()) + ")");
    const Eigen::VectorXd d_hat = zx * first.solve(ds.d);

    Eigen::MatrixXd xh(ds.y.size(), 2);
    xh.col(0).setOnes();
    xh.col(1) = d_hat;
    const Eigen::Matrix2d gram = xh.transpose() * xh;
    Eigen::LDLT<Eigen::Matrix2d> ldlt(gram);
    if (ldlt.info() != Eigen::Success || std::abs(gram.determinant()) <= 1e-14 * gram.trace() * gram.trace())
        throw numerical_error(kModule, "TSLS: fitted exposure has no variation");
    const Eigen::Vector2d coef = ldlt.solve(xh.transpose() * ds.y);

    const Eigen::VectorXd u = ds.y - coef[0] * Eigen::VectorXd::Ones(ds.y.size()) - coef[1] * ds.d;
    const Eigen::MatrixXd weighted = xh.array().colwise() * u.array();
    const Eigen::Matrix2d meat = weighted.transpose() * weighted;
    const Eigen::Matrix2d bread = gram.inverse();
    const Eigen::Matrix2d v = bread * meat * bread;

    BaselineResult out;
    out.method = BaselineMethod::Tsls;
    out.beta_hat = coef[1];
    out.se = std::sqrt(std::max(v(1, 1), 0.0));
    out.extra["intercept"] = coef[0];
    return out;
}

BaselineResult ratio_pair(const Dataset& ds, std::size_t j, std::size_t k) {
    if (j == k) throw config_error(kModule, "ratio_pair needs two distinct instruments");
    if (j >= ds.p() || k >= ds.p())
        throw config_error(kModule, "ratio_pair index out of range (p=" + std::to_string(ds.p()) + ")");
    const auto jj = static_cast<Eigen::Index>(j);
    const auto kk = static_cast<Eigen::Index>(k);
    const Eigen::ArrayXd w = (ds.z.col(jj).array() - ds.z.col(jj).mean()) *
                             (ds.z.col(kk).array() - ds.z.col(kk).mean());
    const double n = static_cast<double>(ds.n());
    const double num = (w * ds.y.array()).sum() / n;
    const double den = (w * ds.d.array()).sum() / n;
    const double scale = (w * ds.d.array()).abs().sum() / n;
    if (!(std::abs(den) > 1e-12 * scale) || den == 0.0)
        throw numerical_error(kModule, "interaction (" + std::to_string(j) + "," + std::to_string(k) +
                                           ") is not associated with the exposure: denominator " +
                                           fmt(den));
    BaselineResult out;
    out.method = BaselineMethod::RatioPair;
    out.beta_hat = num / den;
    const Eigen::ArrayXd psi = w * (ds.y.array() - out.beta_hat * ds.d.array());
    out.se = std::sqrt(psi.square().mean() / (den * den) / n);
    out.extra["denominator"] = den;
    out.extra["j"] = static_cast<double>(j);
    out.extra["k"] = static_cast<double>(k);
    return out;
}

BaselineResult efficient_fixed_r(const Dataset& ds, const InteractionPlan& plan,
                                 std::optional<double> beta_init) {
    const double beta_first = beta_init ? *beta_init : tsls(ds).beta_hat;
    const double n = static_cast<double>(ds.n());
    const Eigen::MatrixXd x1 = with_intercept(ds.z);

    const Eigen::VectorXd target = ds.y - beta_first * ds.d;
    const auto pi_fit = least_squares(x1, target);
    if (pi_fit.rank == 0) throw numerical_error(kModule, "direct-effect regression has rank 0");
    // residual moments are m_i(beta) = Zbar_i (e0_i - beta d_i)
    const Eigen::VectorXd e0 = ds.y - x1 * pi_fit.coef.col(0);

    const Eigen::MatrixXd zbar = demeaned_matrix(ds.z, estimate_means(ds), plan);
    const Eigen::VectorXd c = (zbar.transpose() * e0) / n;
    const Eigen::VectorXd m_hat = -(zbar.transpose() * ds.d) / n;

    auto omega_at = [&](double beta) {
        const Eigen::MatrixXd mb = zbar.array().colwise() * (e0 - beta * ds.d).array();
        return Eigen::MatrixXd((mb.transpose() * mb) / n);
    };

    double ridge_first = 0.0;
    const auto llt = factor_with_ladder(omega_at(beta_first), ridge_first);
    const Eigen::VectorXd theta_opt = llt.solve(m_hat);
    const double slope = theta_opt.dot(m_hat);
    if (!(std::abs(slope) > 0.0))
        throw numerical_error(kModule, "interaction moments carry no exposure relevance (M-hat = 0)");

    BaselineResult out;
    out.method = BaselineMethod::EfficientFixedR;
    out.beta_hat = -theta_opt.dot(c) / slope;

    double ridge_second = 0.0;
    const auto llt_hat = factor_with_ladder(omega_at(out.beta_hat), ridge_second);
    const double info = m_hat.dot(llt_hat.solve(m_hat));
    out.se = info > 0.0 ? std::sqrt(1.0 / info / n) : std::numeric_limits<double>::quiet_NaN();
    out.extra["bound"] = 1.0 / slope / n;
    out.extra["beta_first_step"] = beta_first;
    out.extra["ridge"] = std::max(ridge_first, ridge_second);
    return out;
}

}  // namespace magic
