#include "chisq.hpp"
#include "cue.hpp"
#include "error.hpp"
#include "estimate.hpp"
#include "support.hpp"

#include <doctest.h>

namespace {

// Objective formed from explicit g_i rows and a dense LU solve.
double direct_objective(const magic::MomentComponents& mc, double beta) {
    const Eigen::MatrixXd g = mc.a - beta * mc.b;
    const double n = static_cast<double>(g.rows());
    const Eigen::VectorXd mean = g.colwise().sum().transpose() / n;
    const Eigen::MatrixXd om = g.transpose() * g / n;
    return 0.5 * mean.dot(om.fullPivLu().solve(mean));
}

magic::MomentComponents single_moment(std::uint64_t seed, double* ratio) {
    const Eigen::MatrixXd b = testing::normal_matrix(60, 1, seed).array() + 1.0;
    const Eigen::MatrixXd a = 0.8 * b + 0.5 * testing::normal_matrix(60, 1, seed + 500);
    *ratio = a.sum() / b.sum();
    return magic::make_components(a, b);
}

}  // namespace

TEST_CASE("objective matches direct assembly") {
    const auto mc = testing::random_components(200, 3, 42);
    const auto q = magic::objective(mc, 0.7);
    CHECK(q.ridge == 0.0);
    CHECK(q.value == doctest::Approx(direct_objective(mc, 0.7)).epsilon(1e-10));
}

TEST_CASE("objective is non-negative and zero where the single moment vanishes") {
    double ratio = 0.0;
    const auto mc = single_moment(3, &ratio);
    CHECK(magic::objective(mc, ratio).value < 1e-20);
    for (double b = -5.0; b <= 5.0; b += 0.37) CHECK(magic::objective(mc, b).value >= 0.0);
}

TEST_CASE("analytic derivatives match central differences") {
    for (std::uint64_t f = 0; f < 10; ++f) {
        const auto mc = testing::random_components(150, 4, 100 + f);
        magic::CounterRng rng(magic::derive_key(f, 1, 5));
        for (int t = 0; t < 10; ++t) {
            const double beta = -3.0 + 6.0 * rng.uniform();
            const double h = 1e-5 * std::max(1.0, std::abs(beta));
            const auto d = magic::objective_derivatives(mc, beta, 0.0);
            const double fd1 =
                (magic::objective(mc, beta + h).value - magic::objective(mc, beta - h).value) / (2 * h);
            const double fd2 = (magic::objective_derivatives(mc, beta + h, 0.0).first -
                                magic::objective_derivatives(mc, beta - h, 0.0).first) /
                               (2 * h);
            CHECK(d.value == doctest::Approx(magic::objective(mc, beta).value).epsilon(1e-12));
            CHECK(std::abs(d.first - fd1) <= 1e-6 * std::max(std::abs(fd1), 1e-3));
            CHECK(std::abs(d.second - fd2) <= 1e-6 * std::max(std::abs(fd2), 1e-3));
        }
    }
}

TEST_CASE("single moment: minimizer equals the ratio") {
    for (std::uint64_t f = 0; f < 20; ++f) {
        double ratio = 0.0;
        const auto mc = single_moment(f, &ratio);
        const auto m = magic::minimize(mc);
        CHECK(std::abs(m.beta_hat - ratio) <= 1e-6);
        CHECK(m.q_min < 1e-12);
        CHECK_FALSE(m.boundary_flag);
    }
}

TEST_CASE("A = B gives the minimizer one") {
    // n < r makes Omega singular everywhere, so the ridge is engaged and beta = 1 is the unique zero
    const Eigen::MatrixXd a = testing::normal_matrix(3, 6, 8);
    const auto mc = magic::make_components(a, a);
    CHECK(magic::objective(mc, 1.0).value == doctest::Approx(0.0));
    const auto m = magic::minimize(mc);
    CHECK(m.beta_hat == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(m.ridge > 0.0);
}

TEST_CASE("minimum is no larger than any grid value") {
    const auto mc = testing::random_components(300, 5, 77);
    const auto m = magic::minimize(mc);
    for (int i = 0; i < 512; ++i) {
        const double b = -10.0 + 20.0 * i / 511.0;
        CHECK(m.q_min <= magic::objective(mc, b, m.ridge).value + 1e-15);
    }
}

TEST_CASE("minimizer outside the bounds is flagged") {
    double ratio = 0.0;
    auto mc = single_moment(1, &ratio);
    const auto m = magic::minimize(mc, {-0.2, ratio - 0.3});
    CHECK(m.boundary_flag);
    CHECK(m.beta_hat == doctest::Approx(ratio - 0.3).epsilon(1e-8));
}

TEST_CASE("minimize argument checks") {
    const auto mc = testing::random_components(50, 2, 1);
    CHECK_THROWS_AS(magic::minimize(mc, {1.0, 1.0}), magic::Error);
    CHECK_THROWS_AS(magic::minimize(mc, {}, 2), magic::Error);
    CHECK_THROWS_AS(magic::minimize(mc, {}, 512, 0.0), magic::Error);
    CHECK_THROWS_AS(magic::objective(mc, 0.0, -1.0), magic::Error);
}

TEST_CASE("variance uses the analytic hessian") {
    const auto mc = testing::random_components(400, 4, 5);
    const auto m = magic::minimize(mc);
    const auto v = magic::variance(mc, m.beta_hat, m.ridge);
    const double h = 1e-5 * std::max(1.0, std::abs(m.beta_hat));
    const double fd = (magic::objective_derivatives(mc, m.beta_hat + h, m.ridge).first -
                       magic::objective_derivatives(mc, m.beta_hat - h, m.ridge).first) /
                      (2 * h);
    CHECK(v.hessian == doctest::Approx(fd).epsilon(1e-6));
    CHECK(v.reliable);
    CHECK(v.se == doctest::Approx(std::sqrt(v.v_hat / 400.0)));

    // independent sandwich: D = mean(G) - E[G g^T] Omega^{-1} gbar with G = -B
    const Eigen::MatrixXd g = mc.a - m.beta_hat * mc.b;
    const Eigen::MatrixXd om = g.transpose() * g / 400.0;
    const Eigen::VectorXd gm = g.colwise().mean().transpose();
    const Eigen::MatrixXd cross = -(mc.b.transpose() * g) / 400.0;
    const Eigen::VectorXd dvec = -mc.b.colwise().mean().transpose() - cross * om.inverse() * gm;
    const double vhat = dvec.dot(om.inverse() * dvec) / (v.hessian * v.hessian);
    CHECK(v.v_hat == doctest::Approx(vhat).epsilon(1e-8));
}

TEST_CASE("overidentification test") {
    const auto zero = magic::overid_test(100, 5, 0.0);
    CHECK(zero.applicable);
    CHECK(zero.df == 4);
    CHECK(zero.p_value == 1.0);
    const auto some = magic::overid_test(100, 5, 0.05);
    CHECK(some.j_stat == doctest::Approx(10.0));
    CHECK(some.p_value == doctest::Approx(magic::chisq_sf(10.0, 4)));
    CHECK_FALSE(magic::overid_test(100, 1, 0.3).applicable);
}

TEST_CASE("fit_cue result invariants") {
    const auto mc = testing::random_components(500, 6, 19);
    const auto res = magic::fit_cue(mc);
    CHECK(res.ci_low <= res.beta_hat);
    CHECK(res.beta_hat <= res.ci_high);
    CHECK(res.overid.j_stat >= 0.0);
    CHECK(res.overid.p_value >= 0.0);
    CHECK(res.overid.p_value <= 1.0);
    CHECK(res.r == 6);
    CHECK(res.n == 500);
    const double z = magic::normal_critical(0.95);
    CHECK(res.ci_high - res.beta_hat == doctest::Approx(z * res.se));
}

TEST_CASE("exposure scaling and outcome shift equivariance") {
    const auto ds = testing::binary_dataset(2000, 5, 61);
    const auto base = magic::fit_magic(ds, 2, {}).cue;
    for (double c : {2.0, -0.5, 3.0}) {
        auto scaled = ds;
        scaled.d *= c;
        const auto res = magic::fit_magic(scaled, 2, {}).cue;
        CHECK(res.beta_hat == doctest::Approx(base.beta_hat / c).epsilon(1e-8));
        CHECK(res.se == doctest::Approx(base.se / std::abs(c)).epsilon(1e-8));
    }
    auto shifted = ds;
    shifted.y.array() += 4.0;
    const auto res = magic::fit_magic(shifted, 2, {}).cue;
    CHECK(std::abs(res.beta_hat - base.beta_hat) <= 1e-10);
    CHECK(res.se == doctest::Approx(base.se).epsilon(1e-8));
    CHECK(res.overid.j_stat == doctest::Approx(base.overid.j_stat).epsilon(1e-8));
}

TEST_CASE("ridge ladder") {
    const auto ladder = magic::ridge_ladder(2.0);
    REQUIRE(ladder.size() == 8);
    CHECK(ladder.front() == 0.0);
    CHECK(ladder[1] == doctest::Approx(2e-10));
    CHECK(ladder.back() == doctest::Approx(2e-4));
    CHECK_FALSE(magic::factor_spd(Eigen::MatrixXd::Zero(3, 3), 0.0).has_value());
    CHECK(magic::factor_spd(Eigen::MatrixXd::Zero(3, 3), 1e-3).has_value());
}
