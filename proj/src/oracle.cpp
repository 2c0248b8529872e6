#include "oracle.hpp"

#include "error.hpp"
#include "rng.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace magic {

namespace {

constexpr const char* kModule = "oracle";

Eigen::VectorXd order_block(const Eigen::VectorXd& z, const Eigen::VectorXd& mu, const InteractionPlan& plan,
                            int k) {
    const Eigen::VectorXd all = eval_demeaned(z, mu, plan);
    return all.segment(static_cast<Eigen::Index>(plan.moment_offset(k)), static_cast<Eigen::Index>(plan.count(k)));
}

std::string coordinate_name(std::size_t index, std::size_t p, std::size_t dim) {
    if (index < p) return "mu[" + std::to_string(index) + "]";
    index -= p;
    if (index < dim) return "theta[" + std::to_string(index) + "]";
    return "xi[" + std::to_string(index - dim) + "]";
}

PopulationNuisance shifted(const PopulationNuisance& eta, const Eigen::VectorXd& direction, double h) {
    PopulationNuisance out = eta;
    const Eigen::Index p = eta.mu.size();
    const Eigen::Index dim = eta.theta.size();
    out.mu += h * direction.head(p);
    out.theta += h * direction.segment(p, dim);
    out.xi += h * direction.segment(p + dim, dim);
    return out;
}

}  // namespace

PopulationDgp make_dgp(std::size_t p) {
    PopulationDgp dgp;
    const auto pp = static_cast<Eigen::Index>(p);
    dgp.p = p;
    dgp.mu = Eigen::VectorXd::Constant(pp, 0.5);
    dgp.pi = Eigen::VectorXd::Zero(pp);
    dgp.theta = Eigen::VectorXd::Zero(pp);
    dgp.alpha = Eigen::MatrixXd::Zero(pp, pp);
    dgp.phi = Eigen::MatrixXd::Zero(pp, pp);
    return dgp;
}

void validate_dgp(const PopulationDgp& dgp) {
    if (dgp.p > kMaxOracleInstruments)
        throw guard_error(kModule, "p=" + std::to_string(dgp.p) + " exceeds the enumeration guard p <= " +
                                       std::to_string(kMaxOracleInstruments));
    if (dgp.p < 1) throw config_error(kModule, "p must be >= 1");
    const auto p = static_cast<Eigen::Index>(dgp.p);
    if (dgp.mu.size() != p || dgp.pi.size() != p || dgp.theta.size() != p)
        throw config_error(kModule, "mu, pi and theta must have length p");
    if (dgp.alpha.rows() != p || dgp.alpha.cols() != p) throw config_error(kModule, "alpha must be p x p");
    if (dgp.phi.size() != 0 && (dgp.phi.rows() != p || dgp.phi.cols() != p))
        throw config_error(kModule, "phi must be p x p");
    for (Eigen::Index j = 0; j < p; ++j)
        if (!(dgp.mu[j] > 0.0 && dgp.mu[j] < 1.0)) throw config_error(kModule, "probabilities must lie in (0, 1)");
    for (const auto& t : dgp.alpha3)
        for (auto idx : t.index)
            if (idx >= dgp.p) throw config_error(kModule, "order-3 interaction index out of range");
    if (!dgp.support.empty()) {
        double total = 0.0;
        for (const auto& pt : dgp.support) {
            if (pt.z.size() != p || !(pt.prob >= 0.0)) throw config_error(kModule, "malformed support point");
            total += pt.prob;
        }
        if (std::abs(total - 1.0) > 1e-12) throw config_error(kModule, "support probabilities must sum to 1");
    }
}

std::vector<LatticePoint> lattice(const PopulationDgp& dgp) {
    validate_dgp(dgp);
    if (!dgp.support.empty()) return dgp.support;
    const std::size_t count = std::size_t{1} << dgp.p;
    const auto p = static_cast<Eigen::Index>(dgp.p);
    std::vector<LatticePoint> out(count);
    for (std::size_t code = 0; code < count; ++code) {
        auto& pt = out[code];
        pt.z.resize(p);
        pt.prob = 1.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const bool on = (code >> j) & 1U;
            pt.z[j] = on ? 1.0 : 0.0;
            pt.prob *= on ? dgp.mu[j] : 1.0 - dgp.mu[j];
        }
    }
    return out;
}

Eigen::VectorXd population_mean(const PopulationDgp& dgp) {
    if (dgp.support.empty()) {
        validate_dgp(dgp);
        return dgp.mu;
    }
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dgp.p));
    for (const auto& pt : lattice(dgp)) m += pt.prob * pt.z;
    return m;
}

double conditional_exposure(const PopulationDgp& dgp, const Eigen::VectorXd& z) {
    const auto p = static_cast<Eigen::Index>(dgp.p);
    double d = dgp.theta.dot(z);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index k = j + 1; k < p; ++k) d += dgp.alpha(j, k) * z[j] * z[k];
    for (const auto& t : dgp.alpha3) d += t.coef * z[t.index[0]] * z[t.index[1]] * z[t.index[2]];
    return d;
}

double conditional_outcome(const PopulationDgp& dgp, const Eigen::VectorXd& z) {
    const auto p = static_cast<Eigen::Index>(dgp.p);
    double y = dgp.beta_true * conditional_exposure(dgp, z) + dgp.pi.dot(z);
    if (dgp.phi.size() != 0)
        for (Eigen::Index j = 0; j < p; ++j)
            for (Eigen::Index k = j + 1; k < p; ++k) y += dgp.phi(j, k) * z[j] * z[k];
    return y;
}

Eigen::VectorXd population_moment(const PopulationDgp& dgp, double beta, int q) {
    const auto plan = build_plan(dgp.p, q);
    const auto mu = population_mean(dgp);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(plan.r()));
    for (const auto& pt : lattice(dgp))
        m += pt.prob * eval_demeaned(pt.z, mu, plan) *
             (conditional_outcome(dgp, pt.z) - beta * conditional_exposure(dgp, pt.z));
    return m;
}

Eigen::VectorXd population_derivative(const PopulationDgp& dgp, int q) {
    const auto plan = build_plan(dgp.p, q);
    const auto mu = population_mean(dgp);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(plan.r()));
    for (const auto& pt : lattice(dgp))
        m -= pt.prob * eval_demeaned(pt.z, mu, plan) * conditional_exposure(dgp, pt.z);
    return m;
}

double population_beta(const PopulationDgp& dgp, int q) {
    const Eigen::VectorXd deriv = population_derivative(dgp, q);
    const Eigen::VectorXd at_zero = population_moment(dgp, 0.0, q);
    const double mm = deriv.squaredNorm();
    if (!(mm > 1e-28))
        throw numerical_error(kModule, "identification failure: the interaction relevance vector is zero");
    return -deriv.dot(at_zero) / mm;
}

PopulationNuisance population_nuisance(const PopulationDgp& dgp, const InteractionPlan& plan, int k) {
    const auto dim = static_cast<Eigen::Index>(plan.basis_dim(k));
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd hy = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd hd = Eigen::VectorXd::Zero(dim);
    for (const auto& pt : lattice(dgp)) {
        const Eigen::VectorXd w = eval_basis(pt.z, plan, k);
        gram.noalias() += pt.prob * w * w.transpose();
        hy += pt.prob * conditional_outcome(dgp, pt.z) * w;
        hd += pt.prob * conditional_exposure(dgp, pt.z) * w;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    qr.setThreshold(1e-12);
    if (qr.rank() < dim)
        throw numerical_error(kModule, "singular population design for the order-" + std::to_string(k - 1) +
                                           " projection (rank " + std::to_string(qr.rank()) + " of " +
                                           std::to_string(dim) + ")");
    PopulationNuisance eta;
    eta.mu = population_mean(dgp);
    eta.theta = qr.solve(hy);
    eta.xi = qr.solve(hd);
    return eta;
}

Eigen::VectorXd population_score(const PopulationDgp& dgp, const InteractionPlan& plan, int k, double beta,
                                 const PopulationNuisance& eta) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(plan.count(k)));
    for (const auto& pt : lattice(dgp)) {
        const Eigen::VectorXd w = eval_basis(pt.z, plan, k);
        const double ry = conditional_outcome(dgp, pt.z) - w.dot(eta.theta);
        const double rd = conditional_exposure(dgp, pt.z) - w.dot(eta.xi);
        g += pt.prob * order_block(pt.z, eta.mu, plan, k) * (ry - beta * rd);
    }
    return g;
}

OrthogonalityReport orthogonality_check(const PopulationDgp& dgp, int q, const std::vector<double>& beta_grid,
                                        double step) {
    if (!(step > 0.0)) throw config_error(kModule, "step must be > 0");
    if (beta_grid.empty()) throw config_error(kModule, "beta grid is empty");
    const auto plan = build_plan(dgp.p, q);
    OrthogonalityReport report;
    report.max_by_order.assign(static_cast<std::size_t>(q - 1), 0.0);
    for (int k = 2; k <= q; ++k) {
        const auto eta = population_nuisance(dgp, plan, k);
        const std::size_t dim = plan.basis_dim(k);
        const std::size_t coords = dgp.p + 2 * dim;
        for (double beta : beta_grid) {
            for (std::size_t c = 0; c < coords; ++c) {
                Eigen::VectorXd dir = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(coords));
                dir[static_cast<Eigen::Index>(c)] = 1.0;
                const Eigen::VectorXd up = population_score(dgp, plan, k, beta, shifted(eta, dir, step));
                const Eigen::VectorXd down = population_score(dgp, plan, k, beta, shifted(eta, dir, -step));
                const double deriv = ((up - down) / (2.0 * step)).cwiseAbs().maxCoeff();
                auto& slot = report.max_by_order[static_cast<std::size_t>(k - 2)];
                slot = std::max(slot, deriv);
                if (deriv > report.max_abs_derivative || report.worst_coordinate.empty()) {
                    report.max_abs_derivative = std::max(report.max_abs_derivative, deriv);
                    report.worst_order = k;
                    report.worst_beta = beta;
                    report.worst_coordinate = coordinate_name(c, dgp.p, dim);
                }
            }
        }
    }
    return report;
}

double perturbation_ratio(const PopulationDgp& dgp, int k, double beta, const Eigen::VectorXd& direction,
                          double h) {
    const auto plan = build_plan(dgp.p, k);
    const auto eta = population_nuisance(dgp, plan, k);
    const auto coords = static_cast<Eigen::Index>(dgp.p + 2 * plan.basis_dim(k));
    if (direction.size() != coords)
        throw config_error(kModule, "direction must have length p + 2 * basis_dim(k)");
    const Eigen::VectorXd base = population_score(dgp, plan, k, beta, eta);
    const double one = (population_score(dgp, plan, k, beta, shifted(eta, direction, h)) - base).norm();
    const double two = (population_score(dgp, plan, k, beta, shifted(eta, direction, 2.0 * h)) - base).norm();
    if (!(one > 0.0)) throw numerical_error(kModule, "perturbation leaves the moment unchanged");
    return two / one;
}

PopulationDgp oracle_fixture(const KeyValues& kv, nlohmann::json& echo) {
    const std::string fixture = kv.get_string("fixture", "default");
    const double beta_true = kv.get_double("beta_true", 0.5);
    echo["fixture"] = fixture;
    echo["beta_true"] = beta_true;
    PopulationDgp dgp;
    if (fixture == "default") {
        dgp = make_dgp(2);
        dgp.theta << 1.0, 1.0;
        dgp.pi << 0.3, -0.2;
        dgp.alpha(0, 1) = 1.0;
    } else if (fixture == "dependent") {
        dgp = make_dgp(2);
        dgp.theta << 1.0, 1.0;
        dgp.alpha(0, 1) = 1.0;
        const double corner[4][3] = {{0, 0, 0.4}, {1, 0, 0.1}, {0, 1, 0.1}, {1, 1, 0.4}};
        for (const auto& c : corner) {
            LatticePoint pt;
            pt.z = Eigen::Vector2d(c[0], c[1]);
            pt.prob = c[2];
            dgp.support.push_back(pt);
        }
    } else if (fixture == "random") {
        const long long p = kv.get_int("p", 3);
        const std::uint64_t seed = kv.get_u64("seed", 1);
        echo["p"] = p;
        echo["seed"] = std::to_string(seed);
        if (p < 2) throw config_error(kModule, "p must be >= 2");
        if (p > static_cast<long long>(kMaxOracleInstruments))
            throw guard_error(kModule, "p=" + std::to_string(p) + " exceeds the enumeration guard p <= " +
                                           std::to_string(kMaxOracleInstruments));
        dgp = make_dgp(static_cast<std::size_t>(p));
        CounterRng rng(derive_key(seed, 0, 9));
        const auto pp = static_cast<Eigen::Index>(p);
        for (Eigen::Index j = 0; j < pp; ++j) dgp.mu[j] = 0.2 + 0.6 * rng.uniform();
        for (Eigen::Index j = 0; j < pp; ++j) dgp.theta[j] = rng.normal(1.0, 1.0);
        for (Eigen::Index j = 0; j < pp; ++j) dgp.pi[j] = rng.normal(0.0, 0.5);
        for (Eigen::Index j = 0; j < pp; ++j)
            for (Eigen::Index k = j + 1; k < pp; ++k) dgp.alpha(j, k) = rng.normal(1.0, 0.5);
    } else {
        throw config_error(kModule, "unknown fixture '" + fixture + "' (expected default, dependent or random)");
    }
    dgp.beta_true = beta_true;
    validate_dgp(dgp);
    return dgp;
}

OracleCheckResult run_oracle_check(const PopulationDgp& dgp, int q, const std::vector<double>& beta_grid,
                                   double step, double beta_tol, double derivative_tol, bool expect_failure) {
    OracleCheckResult r;
    r.expect_orthogonality_failure = expect_failure;
    r.beta_recovered = population_beta(dgp, q);
    r.beta_error = std::abs(r.beta_recovered - dgp.beta_true);
    r.orthogonality = orthogonality_check(dgp, q, beta_grid, step);
    r.max_abs_derivative = r.orthogonality.max_abs_derivative;
    r.beta_pass = r.beta_error <= beta_tol;
    r.orthogonality_pass = r.max_abs_derivative <= derivative_tol;
    r.pass = expect_failure ? !r.orthogonality_pass : (r.beta_pass && r.orthogonality_pass);
    return r;
}

nlohmann::json oracle_result_to_json(const OracleCheckResult& r) {
    nlohmann::json by_order = nlohmann::json::array();
    for (double v : r.orthogonality.max_by_order) by_order.push_back(v);
    return {{"population_beta", r.beta_recovered},
            {"beta_error", r.beta_error},
            {"beta_pass", r.beta_pass},
            {"max_abs_derivative", r.max_abs_derivative},
            {"max_abs_derivative_by_order", by_order},
            {"worst_order", r.orthogonality.worst_order},
            {"worst_beta", r.orthogonality.worst_beta},
            {"worst_coordinate", r.orthogonality.worst_coordinate},
            {"orthogonality_pass", r.orthogonality_pass},
            {"expect_orthogonality_failure", r.expect_orthogonality_failure},
            {"pass", r.pass}};
}

std::string oracle_result_text(const OracleCheckResult& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "population beta      %.15g (|error| %.3g) %s\n"
                  "max |dE[g]/d eta|    %.3g at order %d, beta %.3g, %s %s\n"
                  "result               %s%s\n",
                  r.beta_recovered, r.beta_error, r.beta_pass ? "pass" : "FAIL", r.max_abs_derivative,
                  r.orthogonality.worst_order, r.orthogonality.worst_beta, r.orthogonality.worst_coordinate.c_str(),
                  r.orthogonality_pass ? "pass" : "FAIL", r.pass ? "PASS" : "FAIL",
                  r.expect_orthogonality_failure ? " (orthogonality failure expected)" : "");
    return buf;
}

}  // namespace magic
