#include "error.hpp"
#include "keyvalue.hpp"

#include <doctest.h>

TEST_CASE("flat key-value text") {
    const auto kv = magic::KeyValues::parse("# header\np = 10\n  c=3.75  # strength\n\nmethods = magic, tsls\nflag = yes\n");
    CHECK(kv.get_int("p", 0) == 10);
    CHECK(kv.get_double("c", 0.0) == 3.75);
    CHECK(kv.get_bool("flag", false));
    CHECK(kv.get_list("methods", {}) == std::vector<std::string>{"magic", "tsls"});
    CHECK(kv.get_string("missing", "x") == "x");
    CHECK_NOTHROW(kv.require_all_used("test"));
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(magic::KeyValues::parse("a = 1\na = 2\n"), magic::Error);
    CHECK_THROWS_AS(magic::KeyValues::parse("just words\n"), magic::Error);
    CHECK_THROWS_AS(magic::KeyValues::parse("{not json"), magic::Error);
    const auto kv = magic::KeyValues::parse("n = 12x\nb = maybe\nv = inf\n");
    CHECK_THROWS_AS(kv.get_int("n", 0), magic::Error);
    CHECK_THROWS_AS(kv.get_bool("b", false), magic::Error);
    CHECK_THROWS_AS(kv.get_double("v", 0.0), magic::Error);
}

TEST_CASE("unknown keys are reported") {
    const auto kv = magic::KeyValues::parse("p = 3\ntypo = 1\n");
    kv.get_int("p", 0);
    CHECK_THROWS_WITH_AS(kv.require_all_used("test"), doctest::Contains("typo"), magic::Error);
}

TEST_CASE("JSON objects and result echoes") {
    const auto kv = magic::KeyValues::parse(R"({"beta_hat": 1.0, "config": {"q": 2, "tol": 1e-09, "methods": ["magic", "tsls"], "baselines": true}})");
    CHECK(kv.get_int("q", 0) == 2);
    CHECK(kv.get_double("tol", 0.0) == 1e-9);
    CHECK(kv.get_bool("baselines", false));
    CHECK(kv.get_list("methods", {}).size() == 2);
    CHECK_FALSE(kv.has("beta_hat"));
}

TEST_CASE("merge lets overrides win and text round-trips") {
    auto base = magic::KeyValues::parse("a = 1\nb = 2\n");
    base.merge(magic::KeyValues::parse("b = 3\nc = 4\n"));
    CHECK(base.get_int("b", 0) == 3);
    const auto back = magic::KeyValues::parse(base.to_text());
    CHECK(back.values() == base.values());
}
