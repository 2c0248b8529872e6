#include "estimate.hpp"

#include "error.hpp"

#include <cmath>
#include <sstream>

namespace magic {

namespace {

constexpr const char* kModule = "estimate";

nlohmann::json vec_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

MagicFit fit_magic(const Dataset& ds, int q, const CueOptions& options) {
    require_valid(ds);
    MagicFit fit;
    fit.plan = build_plan(ds.p(), q);
    fit.nuisance = estimate_nuisance(ds, fit.plan);
    fit.components = build_components(ds, fit.nuisance, fit.plan);
    fit.cue = fit_cue(fit.components, options);
    return fit;
}

EstimateOptions estimate_options_from_kv(const KeyValues& kv) {
    EstimateOptions o;
    o.q = static_cast<int>(kv.get_int("q", o.q));
    o.cue.bounds.lo = kv.get_double("b_lo", o.cue.bounds.lo);
    o.cue.bounds.hi = kv.get_double("b_hi", o.cue.bounds.hi);
    o.cue.grid_points = static_cast<int>(kv.get_int("grid_points", o.cue.grid_points));
    o.cue.tol = kv.get_double("tol", o.cue.tol);
    o.cue.ci_level = kv.get_double("ci_level", o.cue.ci_level);
    o.cue.ridge = kv.get_double("ridge", o.cue.ridge);
    o.baselines = kv.get_bool("baselines", o.baselines);
    o.strict_binary = kv.get_bool("strict_binary", o.strict_binary);
    const auto pair = kv.get_list("ratio_pair", {"0", "1"});
    if (pair.size() != 2) throw config_error(kModule, "ratio_pair needs two indices, e.g. 0,1");
    KeyValues tmp;
    tmp.set("j", pair[0]);
    tmp.set("k", pair[1]);
    o.ratio_j = static_cast<std::size_t>(tmp.get_u64("j", 0));
    o.ratio_k = static_cast<std::size_t>(tmp.get_u64("k", 1));

    if (o.q < 2) throw config_error(kModule, "q must be >= 2");
    if (!(o.cue.bounds.lo < o.cue.bounds.hi)) throw config_error(kModule, "b_lo must be < b_hi");
    if (o.cue.grid_points < 3) throw config_error(kModule, "grid_points must be >= 3");
    if (!(o.cue.tol > 0.0)) throw config_error(kModule, "tol must be > 0");
    if (!(o.cue.ci_level > 0.0 && o.cue.ci_level < 1.0)) throw config_error(kModule, "ci_level must lie in (0, 1)");
    if (o.cue.ridge < 0.0) throw config_error(kModule, "ridge must be >= 0");
    return o;
}

nlohmann::json estimate_options_to_json(const EstimateOptions& o) {
    return {{"q", o.q},
            {"b_lo", o.cue.bounds.lo},
            {"b_hi", o.cue.bounds.hi},
            {"grid_points", o.cue.grid_points},
            {"tol", o.cue.tol},
            {"ci_level", o.cue.ci_level},
            {"ridge", o.cue.ridge},
            {"baselines", o.baselines},
            {"strict_binary", o.strict_binary},
            {"ratio_pair", std::to_string(o.ratio_j) + "," + std::to_string(o.ratio_k)}};
}

EstimateReport run_estimate(const Dataset& ds, const EstimateOptions& opts) {
    require_valid(ds, opts.strict_binary);
    EstimateReport rep;
    rep.p = ds.p();
    rep.fit = fit_magic(ds, opts.q, opts.cue);
    const double r = static_cast<double>(rep.fit.plan.r());
    const double n = static_cast<double>(ds.n());
    rep.r2_over_n = r * r / n;
    rep.r3_over_n = r * r * r / n;

    try {
        rep.f_stat = f_stat(ds, rep.fit.plan);
    } catch (const Error& e) {
        rep.f_stat_error = e.what();
    }

    if (opts.baselines) {
        auto run = [&](const std::string& name, auto&& fn) {
            BaselineEntry entry;
            entry.method = name;
            try {
                entry.result = fn();
            } catch (const Error& e) {
                entry.error = e.what();
            }
            rep.baselines.push_back(std::move(entry));
        };
        run("tsls", [&] { return tsls(ds); });
        run("ratio_pair", [&] { return ratio_pair(ds, opts.ratio_j, opts.ratio_k); });
        run("efficient_fixed_r", [&] { return efficient_fixed_r(ds, rep.fit.plan); });
    }
    return rep;
}

nlohmann::json baseline_to_json(const BaselineResult& b) {
    nlohmann::json extra = nlohmann::json::object();
    for (const auto& [k, v] : b.extra) extra[k] = finite_or_null(v);
    return {{"method", to_string(b.method)},
            {"beta_hat", finite_or_null(b.beta_hat)},
            {"se", finite_or_null(b.se)},
            {"extra", std::move(extra)}};
}

nlohmann::json report_to_json(const EstimateReport& report, const nlohmann::json& config_echo) {
    const auto& cue = report.fit.cue;
    const auto& plan = report.fit.plan;
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["beta_hat"] = finite_or_null(cue.beta_hat);
    j["se"] = finite_or_null(cue.se);
    j["ci_low"] = finite_or_null(cue.ci_low);
    j["ci_high"] = finite_or_null(cue.ci_high);
    j["ci_level"] = cue.ci_level;
    j["j_applicable"] = cue.overid.applicable;
    if (cue.overid.applicable) {
        j["j_stat"] = finite_or_null(cue.overid.j_stat);
        j["j_df"] = cue.overid.df;
        j["j_pvalue"] = finite_or_null(cue.overid.p_value);
    } else {
        j["j_stat"] = nullptr;
        j["j_df"] = nullptr;
        j["j_pvalue"] = nullptr;
    }
    j["q_min"] = finite_or_null(cue.q_min);
    j["r"] = plan.r();
    j["n"] = cue.n;
    j["p"] = report.p;
    j["q"] = plan.q();
    j["boundary_flag"] = cue.boundary_flag;
    j["ridge_used"] = cue.ridge_used;
    j["ridge"] = cue.ridge;
    j["hessian"] = finite_or_null(cue.hessian);
    j["reliable"] = cue.reliable;
    j["warnings"] = cue.warnings;
    if (report.f_stat) {
        j["f_stat"] = finite_or_null(report.f_stat->f_value);
    } else {
        j["f_stat"] = nullptr;
        j["f_stat_error"] = report.f_stat_error;
    }
    j["plan"] = plan_to_json(plan);
    j["growth"] = {{"r2_over_n", report.r2_over_n}, {"r3_over_n", report.r3_over_n}};

    nlohmann::json theta = nlohmann::json::object();
    nlohmann::json xi = nlohmann::json::object();
    for (int k = 2; k <= plan.q(); ++k) {
        const auto slot = static_cast<std::size_t>(k - 1);
        theta[std::to_string(k - 1)] = vec_json(report.fit.nuisance.theta[slot]);
        xi[std::to_string(k - 1)] = vec_json(report.fit.nuisance.xi[slot]);
    }
    j["nuisance"] = {{"mu_hat", vec_json(report.fit.nuisance.mu_hat)}, {"theta", theta}, {"xi", xi}};

    nlohmann::json baselines = nlohmann::json::object();
    for (const auto& b : report.baselines) {
        if (b.result) baselines[b.method] = baseline_to_json(*b.result);
        else baselines[b.method] = {{"method", b.method}, {"error", b.error}};
    }
    j["baselines"] = std::move(baselines);
    j["config"] = config_echo;
    return j;
}

}  // namespace magic
