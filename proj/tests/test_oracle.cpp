#include "error.hpp"
#include "oracle.hpp"
#include "rng.hpp"

#include <doctest.h>

namespace {

magic::PopulationDgp pair_dgp() {
    auto dgp = magic::make_dgp(2);
    dgp.beta_true = 0.5;
    dgp.theta << 1.0, 0.5;
    dgp.pi << 0.3, -0.7;
    dgp.alpha(0, 1) = 1.0;
    return dgp;
}

magic::PopulationDgp random_dgp(std::size_t p, std::uint64_t seed) {
    magic::CounterRng rng(magic::derive_key(seed, 0, 3));
    auto dgp = magic::make_dgp(p);
    const auto pp = static_cast<Eigen::Index>(p);
    dgp.beta_true = rng.normal();
    for (Eigen::Index j = 0; j < pp; ++j) {
        dgp.mu[j] = 0.2 + 0.6 * rng.uniform();
        dgp.theta[j] = rng.normal(1.0, 1.0);
        dgp.pi[j] = rng.normal();
        for (Eigen::Index k = j + 1; k < pp; ++k) dgp.alpha(j, k) = rng.normal(1.0, 0.5);
    }
    return dgp;
}

magic::PopulationDgp dependent_lattice() {
    auto dgp = pair_dgp();
    const double pts[4][3] = {{0, 0, 0.4}, {1, 0, 0.1}, {0, 1, 0.1}, {1, 1, 0.4}};
    for (const auto& c : pts) dgp.support.push_back({Eigen::Vector2d(c[0], c[1]), c[2]});
    return dgp;
}

}  // namespace

TEST_CASE("moments vanish at the true effect") {
    for (std::size_t p = 2; p <= 5; ++p) {
        const auto dgp = random_dgp(p, p);
        CHECK(magic::population_moment(dgp, dgp.beta_true, 2).cwiseAbs().maxCoeff() <= 1e-12);
        if (p >= 3) CHECK(magic::population_moment(dgp, dgp.beta_true, 3).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("relevance of a single interaction") {
    const auto m = magic::population_derivative(pair_dgp(), 2);
    REQUIRE(m.size() == 1);
    CHECK(m[0] == doctest::Approx(-0.0625).epsilon(1e-14));
}

TEST_CASE("outcome interaction breaks the moment") {
    auto dgp = pair_dgp();
    dgp.phi(0, 1) = 0.8;
    const auto g = magic::population_moment(dgp, dgp.beta_true, 2);
    CHECK(g[0] == doctest::Approx(0.8 * 0.25 * 0.25).epsilon(1e-14));
}

TEST_CASE("population effect is identified regardless of direct effects") {
    auto dgp = pair_dgp();
    CHECK(magic::population_beta(dgp, 2) == doctest::Approx(0.5).epsilon(1e-12));
    for (double shift : {-2.0, 0.0, 5.0}) {
        dgp.pi << shift, 2.0 * shift;
        CHECK(std::abs(magic::population_beta(dgp, 2) - 0.5) <= 1e-12);
    }
}

TEST_CASE("no interaction relevance is an identification failure") {
    auto dgp = pair_dgp();
    dgp.alpha.setZero();
    CHECK_THROWS_WITH_AS(magic::population_beta(dgp, 2), doctest::Contains("identification"), magic::Error);
}

TEST_CASE("a triple interaction of raw indicators identifies at q = 2 and q = 3") {
    auto dgp = magic::make_dgp(3);
    dgp.beta_true = -1.25;
    dgp.theta << 1.0, 1.0, 1.0;
    dgp.pi << 0.4, 0.1, -0.3;
    dgp.alpha3.push_back({{0, 1, 2}, 2.0});
    CHECK(std::abs(magic::population_beta(dgp, 3) + 1.25) <= 1e-12);
    CHECK(std::abs(magic::population_beta(dgp, 2) + 1.25) <= 1e-12);
}

TEST_CASE("a purely additive exposure is not identified") {
    auto dgp = magic::make_dgp(3);
    dgp.theta << 1.0, -0.5, 2.0;
    CHECK_THROWS_AS(magic::population_beta(dgp, 3), magic::Error);
}

TEST_CASE("moment is affine in beta") {
    const auto dgp = random_dgp(4, 9);
    const Eigen::VectorXd g0 = magic::population_moment(dgp, 0.0, 3);
    const Eigen::VectorXd g1 = magic::population_moment(dgp, 1.0, 3);
    for (double b : {-3.0, 0.4, 2.5}) {
        const Eigen::VectorXd predicted = g0 + b * (g1 - g0);
        CHECK((magic::population_moment(dgp, b, 3) - predicted).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("lattice probabilities sum to one") {
    for (std::size_t p : {1u, 4u, 12u}) {
        auto dgp = magic::make_dgp(p);
        dgp.mu.setLinSpaced(static_cast<Eigen::Index>(p), 0.1, 0.9);
        double total = 0.0;
        for (const auto& pt : magic::lattice(dgp)) total += pt.prob;
        CHECK(std::abs(total - 1.0) <= 1e-14);
    }
}

TEST_CASE("enumeration guard") {
    auto dgp = magic::make_dgp(13);
    try {
        magic::lattice(dgp);
        FAIL("expected guard error");
    } catch (const magic::Error& e) {
        CHECK(e.kind() == magic::ErrorKind::Guard);
    }
}

TEST_CASE("orthogonality holds for every nuisance coordinate") {
    for (std::size_t p : {3u, 4u}) {
        for (int q : {2, 3}) {
            const auto rep = magic::orthogonality_check(random_dgp(p, 40 + p), q, {-2, -1, 0, 1, 2}, 1e-4);
            CHECK(rep.max_abs_derivative <= 1e-6);
            CHECK(rep.max_by_order.size() == static_cast<std::size_t>(q - 1));
        }
    }
}

TEST_CASE("moment changes at second order along a joint perturbation") {
    const auto dgp = random_dgp(3, 5);
    for (int k : {2, 3}) {
        const auto plan = magic::build_plan(3, k);
        const auto coords = static_cast<Eigen::Index>(3 + 2 * plan.basis_dim(k));
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(coords);
        dir.head(3).setOnes();
        dir[3] = 1.0;  // intercept of the outcome projection
        dir[4] = 0.5;
        // pairwise moments move at second order; the triple block only at third
        const double expected = k == 2 ? 4.0 : 8.0;
        CHECK(magic::perturbation_ratio(dgp, k, 0.7, dir, 1e-4) == doctest::Approx(expected).epsilon(0.01));
    }
}

TEST_CASE("dependent instruments break orthogonality") {
    const auto rep = magic::orthogonality_check(dependent_lattice(), 2, {-2, -1, 0, 1, 2}, 1e-4);
    CHECK(rep.max_abs_derivative > 1e-3);
    // d E[g] / d(outcome intercept) = -cov(Z1, Z2) = -0.15
    const auto at_zero = magic::orthogonality_check(dependent_lattice(), 2, {0.0}, 1e-4);
    CHECK(at_zero.max_abs_derivative >= 0.15 - 1e-9);
}

TEST_CASE("singular population design is reported") {
    auto dgp = pair_dgp();
    dgp.support.push_back({Eigen::Vector2d(0, 0), 0.5});
    dgp.support.push_back({Eigen::Vector2d(1, 1), 0.5});
    CHECK_THROWS_WITH_AS(magic::orthogonality_check(dgp, 2, {0.0}, 1e-4), doctest::Contains("singular"),
                         magic::Error);
}

TEST_CASE("oracle check fixtures") {
    nlohmann::json echo;
    magic::KeyValues kv;
    const auto dgp = magic::oracle_fixture(kv, echo);
    const auto res = magic::run_oracle_check(dgp, 2, {-2, -1, 0, 1, 2}, 1e-4, 1e-12, 1e-6, false);
    CHECK(res.pass);
    CHECK(res.beta_error <= 1e-12);

    kv.set("fixture", "dependent");
    const auto dep = magic::oracle_fixture(kv, echo);
    const auto r2 = magic::run_oracle_check(dep, 2, {-2, -1, 0, 1, 2}, 1e-4, 1e-12, 1e-6, true);
    CHECK_FALSE(r2.orthogonality_pass);
    CHECK(r2.pass);
}
