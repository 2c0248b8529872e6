#include "interactions.hpp"
#include "moments.hpp"
#include "nuisance.hpp"
#include "simulate.hpp"
#include "support.hpp"

#include <doctest.h>

TEST_CASE("gbar matches direct row averaging") {
    const auto mc = testing::random_components(300, 6, 4);
    for (double beta : {-1.3, 0.0, 0.7, 2.0}) {
        Eigen::VectorXd direct = Eigen::VectorXd::Zero(6);
        for (Eigen::Index i = 0; i < 300; ++i) direct += (mc.a.row(i) - beta * mc.b.row(i)).transpose();
        direct /= 300.0;
        CHECK((magic::gbar(mc, beta) - direct).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(magic::gbar(mc, 0.0) == mc.a.colwise().mean().transpose());
}

TEST_CASE("omega matches direct accumulation on a 500 x r fixture") {
    const auto mc = testing::random_components(500, 8, 9);
    for (double beta : {-0.5, 0.3, 1.7}) {
        Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(8, 8);
        for (Eigen::Index i = 0; i < 500; ++i) {
            const Eigen::VectorXd g = (mc.a.row(i) - beta * mc.b.row(i)).transpose();
            direct += g * g.transpose();
        }
        direct /= 500.0;
        const Eigen::MatrixXd om = magic::omega(mc, beta);
        CHECK((om - direct).cwiseAbs().maxCoeff() <= 1e-10 * direct.cwiseAbs().maxCoeff());
        CHECK((om - om.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(om).eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("single observation gives a rank-one outer product") {
    Eigen::MatrixXd a(1, 3), b(1, 3);
    a << 1, 2, 3;
    b << 0.5, -1, 2;
    const auto mc = magic::make_components(a, b);
    const Eigen::VectorXd g = (a - 0.4 * b).transpose();
    CHECK((magic::omega(mc, 0.4) - g * g.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("outcome equal to exposure gives A = B and zero moments at one") {
    auto ds = testing::binary_dataset(200, 4, 2);
    ds.y = ds.d;
    const auto plan = magic::build_plan(4, 3);
    const auto mc = magic::build_components(ds, magic::estimate_nuisance(ds, plan), plan);
    CHECK(mc.a == mc.b);
    CHECK(magic::gbar(mc, 1.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("moments are quadratic in beta") {
    const auto mc = testing::random_components(120, 5, 13);
    const Eigen::VectorXd v = testing::normal_matrix(5, 1, 99).col(0);
    auto quad = [&](double b) { return v.dot(magic::omega(mc, b) * v); };
    auto lin = [&](double b) { return magic::gbar(mc, b).dot(v); };
    // Lagrange interpolation through 0, 1, 2, evaluated at 3.7
    const double x = 3.7;
    const double l0 = (x - 1) * (x - 2) / 2.0, l1 = -x * (x - 2), l2 = x * (x - 1) / 2.0;
    const double interp = l0 * quad(0) + l1 * quad(1) + l2 * quad(2);
    CHECK(interp == doctest::Approx(quad(x)).epsilon(1e-10));
    CHECK(l0 * lin(0) + l1 * lin(1) + l2 * lin(2) == doctest::Approx(lin(x)).epsilon(1e-10));
}

TEST_CASE("outcome shift leaves A unchanged") {
    const auto ds = testing::binary_dataset(300, 4, 21);
    auto shifted = ds;
    shifted.y.array() += 3.0;
    const auto plan = magic::build_plan(4, 2);
    const auto a = magic::build_components(ds, magic::estimate_nuisance(ds, plan), plan);
    const auto b = magic::build_components(shifted, magic::estimate_nuisance(shifted, plan), plan);
    CHECK((a.a - b.a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(a.b == b.b);
}

TEST_CASE("moments vanish at the truth in a large sample") {
    // d = z1 z2 + noise, y = beta d + 0.3 z1 + eps
    magic::CounterRng rng(magic::derive_key(17, 0, 1));
    const Eigen::Index n = 100000;
    magic::Dataset ds;
    ds.z.resize(n, 2);
    ds.y.resize(n);
    ds.d.resize(n);
    const double beta = 0.8;
    for (Eigen::Index i = 0; i < n; ++i) {
        ds.z(i, 0) = rng.bernoulli(0.5);
        ds.z(i, 1) = rng.bernoulli(0.5);
        const double u = rng.normal();
        ds.d[i] = ds.z(i, 0) * ds.z(i, 1) + u;
        ds.y[i] = beta * ds.d[i] + 0.3 * ds.z(i, 0) + 0.5 * u + rng.normal();
    }
    const auto plan = magic::build_plan(2, 2);
    const auto mc = magic::build_components(ds, magic::estimate_nuisance(ds, plan), plan);
    const double g = magic::gbar(mc, beta)[0];
    const double se = std::sqrt(magic::omega(mc, beta)(0, 0) / static_cast<double>(n));
    CHECK(std::abs(g) <= 3.0 * se);
}

TEST_CASE("snapshot bundles gbar and omega") {
    const auto mc = testing::random_components(50, 3, 1);
    const auto s = magic::snapshot(mc, 0.25);
    CHECK(s.beta == 0.25);
    CHECK(s.gbar == magic::gbar(mc, 0.25));
    CHECK(s.omega == magic::omega(mc, 0.25));
}
