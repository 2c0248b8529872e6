#include "cue.hpp"

#include "chisq.hpp"
#include "error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace magic {

namespace {

constexpr const char* kModule = "cue";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Evaluation {
    Eigen::VectorXd g;
    Eigen::VectorXd x;  // (Omega + ridge I)^{-1} g
    Eigen::LLT<Eigen::MatrixXd> llt;
};

std::optional<Evaluation> evaluate(const MomentComponents& mc, double beta, double ridge) {
    auto llt = factor_spd(omega(mc, beta), ridge);
    if (!llt) return std::nullopt;
    Evaluation ev;
    ev.g = gbar(mc, beta);
    ev.x = llt->solve(ev.g);
    ev.llt = std::move(*llt);
    return ev;
}

double value_at(const MomentComponents& mc, double beta, double ridge) {
    auto ev = evaluate(mc, beta, ridge);
    if (!ev) return kNaN;
    return 0.5 * ev->g.dot(ev->x);
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

double ridge_scale(const MomentComponents& mc) {
    const double r = static_cast<double>(mc.r());
    const double taa = mc.s_aa.trace() / r;
    if (taa > 0.0 && std::isfinite(taa)) return taa;
    const double tbb = mc.s_bb.trace() / r;
    if (tbb > 0.0 && std::isfinite(tbb)) return tbb;
    return 1.0;
}

std::vector<double> ridge_ladder(double scale) {
    std::vector<double> levels{0.0};
    for (double f = 1e-10; f <= 1.0001e-4; f *= 10.0) levels.push_back(f * scale);
    return levels;
}

std::optional<Eigen::LLT<Eigen::MatrixXd>> factor_spd(const Eigen::MatrixXd& omega, double ridge) {
    Eigen::MatrixXd m = omega;
    if (ridge > 0.0) m.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const double eps = std::numeric_limits<double>::epsilon();
    const double rc = llt.rcond();
    if (!(rc > static_cast<double>(m.rows()) * eps)) return std::nullopt;
    return llt;
}

ObjectiveValue objective(const MomentComponents& mc, double beta, double ridge) {
    if (ridge < 0.0) throw config_error(kModule, "ridge must be >= 0");
    std::vector<double> levels{ridge};
    for (double l : ridge_ladder(ridge_scale(mc)))
        if (l > ridge) levels.push_back(l);
    for (double level : levels) {
        const double v = value_at(mc, beta, level);
        if (std::isfinite(v)) return {std::max(v, 0.0), level};
    }
    Eigen::MatrixXd om = omega(mc, beta);
    Eigen::LLT<Eigen::MatrixXd> llt(om);
    throw numerical_error(kModule, "Omega(beta=" + fmt(beta) +
                                       ") is not positive definite even with ridge " +
                                       fmt(levels.back()) + " (rcond estimate " +
                                       fmt(llt.info() == Eigen::Success ? llt.rcond() : 0.0) + ")");
}

ObjectiveDerivatives objective_derivatives(const MomentComponents& mc, double beta, double ridge) {
    auto ev = evaluate(mc, beta, ridge);
    if (!ev)
        throw numerical_error(kModule, "Omega(beta=" + fmt(beta) + ") does not factor at ridge " + fmt(ridge));
    const Eigen::MatrixXd cross = mc.s_ab + mc.s_ab.transpose();
    const Eigen::MatrixXd d_omega = -cross + (2.0 * beta) * mc.s_bb;
    const Eigen::VectorXd dg = -mc.b_mean;
    const Eigen::VectorXd& x = ev->x;

    ObjectiveDerivatives out;
    out.value = 0.5 * ev->g.dot(x);
    out.first = dg.dot(x) - 0.5 * x.dot(d_omega * x);
    const Eigen::VectorXd u = dg - d_omega * x;
    out.second = u.dot(ev->llt.solve(u)) - x.dot(mc.s_bb * x);
    return out;
}

MinimizeResult minimize(const MomentComponents& mc, Bounds bounds, int grid_points, double tol,
                        double initial_ridge) {
    if (!(bounds.lo < bounds.hi))
        throw config_error(kModule, "parameter bounds need lo < hi");
    if (grid_points < 3) throw config_error(kModule, "grid_points must be >= 3");
    if (!(tol > 0.0)) throw config_error(kModule, "tol must be > 0");
    if (initial_ridge < 0.0) throw config_error(kModule, "ridge must be >= 0");

    const auto m = static_cast<std::size_t>(grid_points);
    std::vector<double> grid(m);
    const double h = (bounds.hi - bounds.lo) / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i) grid[i] = bounds.lo + h * static_cast<double>(i);
    grid.back() = bounds.hi;

    // one ridge level for the whole search keeps Q continuous in beta
    std::vector<double> levels{initial_ridge};
    for (double l : ridge_ladder(ridge_scale(mc)))
        if (l > initial_ridge) levels.push_back(l);

    std::vector<double> values(m);
    double ridge = levels.front();
    std::size_t failures = 0;
    for (double level : levels) {
        ridge = level;
        failures = 0;
        for (std::size_t i = 0; i < m; ++i) {
            values[i] = value_at(mc, grid[i], level);
            if (!std::isfinite(values[i])) ++failures;
        }
        if (failures == 0) break;
    }
    if (failures == m)
        throw numerical_error(kModule, "objective is non-finite at every grid point");

    std::size_t best = m;
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::isfinite(values[i])) continue;
        if (best == m || values[i] < values[best]) best = i;
    }

    double a = grid[best > 0 ? best - 1 : 0];
    double b = grid[best + 1 < m ? best + 1 : m - 1];
    auto f = [&](double beta) {
        const double v = value_at(mc, beta, ridge);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }

    MinimizeResult out;
    out.beta_hat = grid[best];
    out.q_min = values[best];
    const double mid = 0.5 * (a + b);
    for (double cand : {c, d, mid}) {
        const double v = f(cand);
        if (v < out.q_min) {
            out.q_min = v;
            out.beta_hat = cand;
        }
    }
    // Newton polish with the analytic derivatives, confined to the final bracket
    const double lo = std::max(bounds.lo, a - tol), hi = std::min(bounds.hi, b + tol);
    for (int it = 0; it < 8; ++it) {
        ObjectiveDerivatives dv;
        try {
            dv = objective_derivatives(mc, out.beta_hat, ridge);
        } catch (const Error&) {
            break;
        }
        if (!(dv.second > 0.0) || !std::isfinite(dv.first)) break;
        const double next = out.beta_hat - dv.first / dv.second;
        if (!(next >= lo && next <= hi)) break;
        const double v = f(next);
        if (!(v <= out.q_min + 1e-14 * (1.0 + out.q_min))) break;
        const double step = std::abs(next - out.beta_hat);
        out.beta_hat = next;
        out.q_min = std::min(out.q_min, v);
        if (step <= 1e-15 * (1.0 + std::abs(next))) break;
    }
    out.q_min = std::max(out.q_min, 0.0);
    out.ridge = ridge;
    out.grid_failures = failures;
    out.boundary_flag = std::abs(out.beta_hat - bounds.lo) <= tol || std::abs(out.beta_hat - bounds.hi) <= tol;
    return out;
}

VarianceResult variance(const MomentComponents& mc, double beta_hat, double ridge) {
    auto ev = evaluate(mc, beta_hat, ridge);
    if (!ev) {
        // same ladder as the objective
        const auto used = objective(mc, beta_hat, ridge).ridge;
        ev = evaluate(mc, beta_hat, used);
        ridge = used;
    }
    const auto derivs = objective_derivatives(mc, beta_hat, ridge);
    const Eigen::MatrixXd s_ba = mc.s_ab.transpose();

    VarianceResult out;
    out.hessian = derivs.second;
    out.d_hat = -mc.b_mean + (s_ba - beta_hat * mc.s_bb) * ev->x;
    const double middle = out.d_hat.dot(ev->llt.solve(out.d_hat));
    out.v_hat = middle / (out.hessian * out.hessian);
    out.se = std::sqrt(out.v_hat / static_cast<double>(mc.n()));
    out.reliable = out.hessian > 0.0 && std::isfinite(out.se);
    return out;
}

OverIdResult overid_test(Eigen::Index n, Eigen::Index r, double q_min) {
    OverIdResult out;
    if (r < 2) return out;  // just identified: no test
    out.applicable = true;
    out.df = static_cast<int>(r - 1);
    out.j_stat = 2.0 * static_cast<double>(n) * q_min;
    out.p_value = chisq_sf(out.j_stat, out.df);
    return out;
}

OverIdResult overid_test(const MomentComponents& mc, double /*beta_hat*/, double q_min) {
    return overid_test(mc.n(), mc.r(), q_min);
}

CueResult fit_cue(const MomentComponents& mc, const CueOptions& options) {
    if (!(options.ci_level > 0.0 && options.ci_level < 1.0))
        throw config_error(kModule, "ci_level must lie in (0, 1)");
    CueResult out;
    out.n = mc.n();
    out.r = mc.r();
    out.ci_level = options.ci_level;

    const auto mn = minimize(mc, options.bounds, options.grid_points, options.tol, options.ridge);
    out.beta_hat = mn.beta_hat;
    out.q_min = mn.q_min;
    out.boundary_flag = mn.boundary_flag;
    out.ridge = mn.ridge;
    if (mn.boundary_flag) out.warnings.push_back("minimizer on the parameter-space boundary; identification may be weak");
    if (mn.grid_failures > 0)
        out.warnings.push_back(std::to_string(mn.grid_failures) + " grid points skipped: Omega not factorizable");

    const auto var = variance(mc, out.beta_hat, out.ridge);
    out.se = var.se;
    out.hessian = var.hessian;
    out.reliable = var.reliable;
    if (!var.reliable) out.warnings.push_back("non-positive curvature at the minimizer; standard error unreliable");

    // variance() may have escalated the ridge at beta_hat
    out.ridge = std::max(out.ridge, objective(mc, out.beta_hat, out.ridge).ridge);
    out.ridge_used = out.ridge > 0.0;

    const double z = normal_critical(options.ci_level);
    out.ci_low = out.beta_hat - z * out.se;
    out.ci_high = out.beta_hat + z * out.se;
    out.overid = overid_test(mc, out.beta_hat, out.q_min);
    return out;
}

}  // namespace magic
