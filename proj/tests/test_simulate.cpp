#include "error.hpp"
#include "keyvalue.hpp"
#include "simulate.hpp"

#include <doctest.h>

#include <cmath>

namespace {

int count_equal(const Eigen::VectorXd& v, double x) {
    int c = 0;
    for (Eigen::Index j = 0; j < v.size(); ++j) c += v[j] == x ? 1 : 0;
    return c;
}

}  // namespace

TEST_CASE("scenario I marks ceil(30% p) invalid instruments") {
    magic::ScenarioConfig cfg;
    cfg.n = 50;
    const auto t = magic::gen_dataset(cfg, 0).truth;
    CHECK(count_equal(t.pi, 0.2) == 3);
    CHECK(count_equal(t.pi, 0.0) == 7);
    CHECK(t.theta == Eigen::VectorXd::Ones(10));
    cfg.p = 7;
    CHECK(count_equal(magic::gen_dataset(cfg, 0).truth.pi, 0.2) == 3);
}

TEST_CASE("scenario II and IV parameter layouts") {
    magic::ScenarioConfig cfg;
    cfg.n = 50;
    cfg.scenario = magic::Scenario::II;
    const auto t2 = magic::gen_dataset(cfg, 0).truth;
    CHECK(count_equal(t2.pi, 0.2) == 2);
    CHECK(count_equal(t2.pi, 0.4) == 2);
    CHECK(count_equal(t2.pi, 0.6) == 2);
    CHECK(count_equal(t2.pi, 0.0) == 4);

    cfg.scenario = magic::Scenario::IV;
    const auto t4 = magic::gen_dataset(cfg, 0).truth;
    for (Eigen::Index j = 0; j < 7; ++j) CHECK(t4.pi[j] == t4.theta[j] / 2.0);
    for (Eigen::Index j = 7; j < 10; ++j) CHECK(t4.pi[j] == 0.0);
}

TEST_CASE("interaction strength scales with n") {
    magic::ScenarioConfig cfg;
    cfg.n = 400;
    cfg.c = 0.0;
    CHECK(magic::gen_dataset(cfg, 0).truth.alpha == 0.0);
    cfg.c = 4.0;
    CHECK(magic::gen_dataset(cfg, 0).truth.alpha == doctest::Approx(0.2));
}

TEST_CASE("datasets are deterministic per replication") {
    magic::ScenarioConfig cfg;
    cfg.scenario = magic::Scenario::III;
    cfg.n = 300;
    cfg.seed = 99;
    const auto a = magic::gen_dataset(cfg, 4).data;
    const auto b = magic::gen_dataset(cfg, 4).data;
    CHECK(a.y == b.y);
    CHECK(a.d == b.d);
    CHECK(a.z == b.z);
    CHECK(a.y != magic::gen_dataset(cfg, 5).data.y);
    cfg.seed = 100;
    CHECK(a.y != magic::gen_dataset(cfg, 4).data.y);
}

TEST_CASE("instrument means and error covariance match the design") {
    magic::ScenarioConfig cfg;
    cfg.n = 100000;
    cfg.p = 3;
    cfg.c = 0.0;
    cfg.mu = 0.3;
    cfg.beta_true = 0.7;
    const auto sim = magic::gen_dataset(cfg, 0);
    const auto& ds = sim.data;
    const double n = static_cast<double>(cfg.n);
    for (Eigen::Index j = 0; j < 3; ++j)
        CHECK(std::abs(ds.z.col(j).mean() - cfg.mu) <= 4.0 * std::sqrt(cfg.mu * (1 - cfg.mu) / n));

    const Eigen::VectorXd nu = ds.d - ds.z * sim.truth.theta;
    const Eigen::VectorXd eps = ds.y - cfg.beta_true * ds.d - ds.z * sim.truth.pi;
    const double vee = eps.squaredNorm() / n, vnn = nu.squaredNorm() / n, ven = eps.dot(nu) / n;
    // standard errors of second moments of a bivariate normal
    CHECK(std::abs(vee - 1.0) <= 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(vnn - 1.0) <= 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(ven - 0.25) <= 5.0 * std::sqrt((1.0 + 0.25 * 0.25) / n));
}

TEST_CASE("outcome interactions are redrawn unless frozen") {
    magic::ScenarioConfig cfg;
    cfg.n = 50;
    cfg.misspecify_alice = true;
    const auto a = magic::gen_dataset(cfg, 0).truth.phi;
    const auto b = magic::gen_dataset(cfg, 1).truth.phi;
    CHECK(a(0, 1) != 0.0);
    CHECK(a != b);
    cfg.freeze_phi = true;
    CHECK(magic::gen_dataset(cfg, 0).truth.phi == magic::gen_dataset(cfg, 1).truth.phi);
    cfg.misspecify_alice = false;
    CHECK(magic::gen_dataset(cfg, 0).truth.phi.isZero());
}

TEST_CASE("spread read as standard deviation when requested") {
    magic::ScenarioConfig cfg;
    cfg.scenario = magic::Scenario::Custom;
    cfg.n = 10;
    cfg.p = 12;
    cfg.theta_spread = 0.0;
    cfg.pi_mean = 0.0;
    cfg.pi_spread = 4.0;
    const auto var = magic::gen_dataset(cfg, 0).truth;
    cfg.spread_is_variance = false;
    const auto sd = magic::gen_dataset(cfg, 0).truth;
    CHECK(var.theta == Eigen::VectorXd::Ones(12));
    // same normal draws, scaled by 2 versus 4
    CHECK((sd.pi - 2.0 * var.pi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("config validation") {
    magic::ScenarioConfig cfg;
    cfg.mu = 1.0;
    CHECK_THROWS_AS(magic::validate_config(cfg), magic::Error);
    cfg = {};
    cfg.cov_eps_nu = 1.0;
    CHECK_THROWS_AS(magic::validate_config(cfg), magic::Error);
    cfg = {};
    cfg.q = 11;
    CHECK_THROWS_AS(magic::validate_config(cfg), magic::Error);
    magic::KeyValues kv;
    kv.set("reps", "0");
    CHECK_THROWS_AS(magic::mc_settings_from_kv(kv), magic::Error);
    kv.set("reps", "5");
    kv.set("methods", "magic,lasso");
    CHECK_THROWS_AS(magic::mc_settings_from_kv(kv), magic::Error);
    CHECK_THROWS_AS(magic::scenario_from_string("V"), magic::Error);
}

TEST_CASE("config echo round-trips") {
    magic::KeyValues kv;
    kv.set("scenario", "custom");
    kv.set("c", "7.5");
    kv.set("misspecify_alice", "true");
    kv.set("seed", "18446744073709551615");
    const auto cfg = magic::scenario_from_kv(kv);
    CHECK(cfg.pi_mean == 0.0);
    const auto echo = magic::scenario_to_json(cfg);
    const auto back = magic::scenario_from_kv(magic::KeyValues::parse(echo.dump()));
    CHECK(magic::scenario_to_json(back) == echo);
}

TEST_CASE("single replication summary") {
    magic::ScenarioConfig cfg;
    cfg.n = 1000;
    magic::McSettings s;
    s.reps = 1;
    const auto sum = magic::run_monte_carlo(cfg, s);
    for (const auto& m : sum.methods) {
        CHECK(m.sd == 0.0);
        CHECK((m.coverage == 0.0 || m.coverage == 1.0));
        CHECK(m.used == 1);
    }
}

TEST_CASE("summary does not depend on the worker count") {
    magic::ScenarioConfig cfg;
    cfg.n = 800;
    cfg.seed = 3;
    magic::McSettings s;
    s.reps = 12;
    s.methods = {"magic", "tsls", "ratio_pair", "efficient_fixed_r"};
    const auto one = magic::summary_to_json(magic::run_monte_carlo(cfg, s)).dump();
    s.workers = 3;
    const auto three = magic::summary_to_json(magic::run_monte_carlo(cfg, s)).dump();
    CHECK(one == three);
    CHECK(one.find("workers") == std::string::npos);
}

TEST_CASE("summary rates and table columns") {
    magic::ScenarioConfig cfg;
    cfg.n = 800;
    magic::McSettings s;
    s.reps = 10;
    const auto sum = magic::run_monte_carlo(cfg, s);
    for (const auto& m : sum.methods) {
        CHECK(m.coverage >= 0.0);
        CHECK(m.coverage <= 1.0);
        if (m.overid_rejection_rate) {
            CHECK(*m.overid_rejection_rate >= 0.0);
            CHECK(*m.overid_rejection_rate <= 1.0);
        }
    }
    CHECK(sum.methods[0].overid_rejection_rate.has_value());
    CHECK_FALSE(sum.methods[1].overid_rejection_rate.has_value());
    const auto table = magic::summary_table(sum);
    for (const char* col : {"Method", "|Bias|", "SD", "Mean SE", "Coverage(95%)"})
        CHECK(table.find(col) != std::string::npos);
}

TEST_CASE("too many exclusions fail the summary") {
    magic::McSummary sum;
    sum.reps = 100;
    magic::MethodSummary m;
    m.method = "magic";
    m.excluded = 5;
    sum.methods.push_back(m);
    CHECK_NOTHROW(magic::check_exclusions(sum));
    sum.methods[0].excluded = 6;
    try {
        magic::check_exclusions(sum);
        FAIL("expected exclusions error");
    } catch (const magic::Error& e) {
        CHECK(e.kind() == magic::ErrorKind::Exclusions);
    }
}
