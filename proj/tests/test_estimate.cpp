#include "error.hpp"
#include "estimate.hpp"
#include "simulate.hpp"
#include "support.hpp"

#include <doctest.h>

TEST_CASE("report carries the documented fields") {
    magic::ScenarioConfig cfg;
    cfg.n = 3000;
    cfg.seed = 2;
    const auto ds = magic::gen_dataset(cfg, 0).data;
    const auto report = magic::run_estimate(ds, {});
    const auto j = magic::report_to_json(report, magic::estimate_options_to_json({}));
    for (const char* key : {"schema_version", "beta_hat", "se", "ci_low", "ci_high", "ci_level", "j_stat", "j_df",
                            "j_pvalue", "q_min", "r", "n", "p", "q", "boundary_flag", "ridge_used", "f_stat", "plan",
                            "growth", "nuisance", "baselines", "config"})
        CHECK_MESSAGE(j.contains(key), key);
    CHECK(j["r"] == 45);
    CHECK(j["j_df"] == 44);
    CHECK(j["growth"]["r2_over_n"].get<double>() == doctest::Approx(45.0 * 45.0 / 3000.0));
    CHECK(j["baselines"].contains("tsls"));
    CHECK(j["baselines"].contains("efficient_fixed_r"));
}

TEST_CASE("single moment reports the overidentification test as not applicable") {
    const auto ds = testing::binary_dataset(500, 2, 3);
    const auto j = magic::report_to_json(magic::run_estimate(ds, {}), nlohmann::json::object());
    CHECK(j["r"] == 1);
    CHECK(j["j_applicable"] == false);
    CHECK(j["j_stat"].is_null());
    CHECK(j["j_pvalue"].is_null());
}

TEST_CASE("a single instrument cannot form interactions") {
    auto ds = testing::binary_dataset(100, 1, 3);
    CHECK_THROWS_WITH_AS(magic::run_estimate(ds, {}), doctest::Contains("q >= 2 requires p >= 2"), magic::Error);
}

TEST_CASE("duplicated instruments engage the ridge") {
    auto ds = testing::binary_dataset(1500, 4, 5);
    ds.z.col(3) = ds.z.col(0);
    const auto fit = magic::fit_magic(ds, 2, {});
    CHECK(fit.cue.ridge_used);
    CHECK(fit.cue.ridge > 0.0);
}

TEST_CASE("options echo reproduces the options") {
    auto kv = magic::KeyValues::parse("q = 3\nb_lo = -4\nci_level = 0.9\nbaselines = false\nratio_pair = 2,3\n");
    const auto opts = magic::estimate_options_from_kv(kv);
    CHECK(opts.q == 3);
    CHECK(opts.ratio_j == 2);
    const auto echo = magic::estimate_options_to_json(opts);
    const auto back = magic::estimate_options_from_kv(magic::KeyValues::parse(echo.dump()));
    CHECK(magic::estimate_options_to_json(back) == echo);
    CHECK_THROWS_AS(magic::estimate_options_from_kv(magic::KeyValues::parse("ci_level = 1.5\n")), magic::Error);
    CHECK_THROWS_AS(magic::estimate_options_from_kv(magic::KeyValues::parse("b_lo = 3\nb_hi = 1\n")), magic::Error);
}
