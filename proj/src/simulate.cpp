#include "simulate.hpp"

#include "baselines.hpp"
#include "chisq.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "estimate.hpp"
#include "rng.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace magic {

namespace {

constexpr const char* kModule = "simulate";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum StreamTag : std::uint64_t { kParams = 1, kInstruments = 2, kErrors = 3, kPhi = 4 };
constexpr std::uint64_t kFrozenRep = ~std::uint64_t{0};

std::size_t ceil_percent(std::size_t p, std::size_t percent) { return (p * percent + 99) / 100; }

double spread_sd(const ScenarioConfig& cfg, double spread) {
    return cfg.spread_is_variance ? std::sqrt(spread) : spread;
}

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> m{"magic", "tsls", "ratio_pair", "efficient_fixed_r"};
    return m;
}

struct MethodOutcome {
    bool ok = false;
    double beta = kNaN;
    double se = kNaN;
    bool covers = false;
    int reject = -1;  // -1: test not applicable
    std::string error;
};

struct RepRecord {
    std::vector<MethodOutcome> methods;
    double f_stat = kNaN;
};

RepRecord run_replication(const ScenarioConfig& cfg, const McSettings& settings, std::uint64_t rep,
                          double z_crit) {
    RepRecord rec;
    rec.methods.resize(settings.methods.size());
    SimulatedData sim;
    std::string gen_error;
    try {
        sim = gen_dataset(cfg, rep);
        require_valid(sim.data);
    } catch (const Error& e) {
        gen_error = e.what();
    }
    if (!gen_error.empty()) {
        for (auto& m : rec.methods) m.error = gen_error;
        return rec;
    }
    const Dataset& ds = sim.data;
    const double truth = sim.truth.beta;

    try {
        rec.f_stat = f_stat(ds, build_plan(ds.p(), cfg.q)).f_value;
    } catch (const Error&) {
        rec.f_stat = kNaN;
    }

    for (std::size_t m = 0; m < settings.methods.size(); ++m) {
        auto& out = rec.methods[m];
        const auto& name = settings.methods[m];
        try {
            if (name == "magic") {
                const auto fit = fit_magic(ds, cfg.q, settings.cue);
                out.beta = fit.cue.beta_hat;
                out.se = fit.cue.se;
                if (fit.cue.overid.applicable)
                    out.reject = fit.cue.overid.p_value < settings.alpha ? 1 : 0;
            } else {
                BaselineResult b;
                if (name == "tsls") b = tsls(ds);
                else if (name == "ratio_pair") b = ratio_pair(ds, settings.ratio_j, settings.ratio_k);
                else b = efficient_fixed_r(ds, build_plan(ds.p(), cfg.q));
                out.beta = b.beta_hat;
                out.se = b.se;
            }
            if (!std::isfinite(out.beta) || !std::isfinite(out.se)) {
                out.error = name + ": non-finite estimate or standard error";
                continue;
            }
            out.covers = std::abs(out.beta - truth) <= z_crit * out.se;
            out.ok = true;
        } catch (const Error& e) {
            out.error = e.what();
        }
    }
    return rec;
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::I: return "I";
        case Scenario::II: return "II";
        case Scenario::III: return "III";
        case Scenario::IV: return "IV";
        case Scenario::Custom: return "custom";
    }
    return "custom";
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "I" || s == "1") return Scenario::I;
    if (s == "II" || s == "2") return Scenario::II;
    if (s == "III" || s == "3") return Scenario::III;
    if (s == "IV" || s == "4") return Scenario::IV;
    if (s == "custom") return Scenario::Custom;
    throw config_error(kModule, "unknown scenario '" + s + "' (expected I, II, III, IV or custom)");
}

void validate_config(const ScenarioConfig& cfg) {
    if (cfg.p < 2) throw config_error(kModule, "p must be >= 2");
    if (cfg.n < 2) throw config_error(kModule, "n must be >= 2");
    if (cfg.q < 2 || static_cast<std::size_t>(cfg.q) > cfg.p)
        throw config_error(kModule, "q must satisfy 2 <= q <= p");
    if (!(cfg.mu > 0.0 && cfg.mu < 1.0)) throw config_error(kModule, "mu must lie in (0, 1)");
    if (!(cfg.var_eps > 0.0 && cfg.var_nu > 0.0 &&
          cfg.var_eps * cfg.var_nu - cfg.cov_eps_nu * cfg.cov_eps_nu > 0.0))
        throw config_error(kModule, "error covariance must be positive definite");
    if (cfg.theta_spread < 0.0 || cfg.pi_spread < 0.0)
        throw config_error(kModule, "theta_spread and pi_spread must be >= 0");
}

ScenarioConfig scenario_from_kv(const KeyValues& kv) {
    ScenarioConfig cfg;
    cfg.scenario = scenario_from_string(kv.get_string("scenario", "I"));
    if (cfg.scenario == Scenario::Custom) cfg.pi_mean = 0.0;
    const long long p = kv.get_int("p", 10);
    const long long n = kv.get_int("n", 5000);
    if (p < 0 || n < 0) throw config_error(kModule, "p and n must be non-negative");
    cfg.p = static_cast<std::size_t>(p);
    cfg.n = static_cast<std::size_t>(n);
    cfg.q = static_cast<int>(kv.get_int("q", cfg.q));
    cfg.beta_true = kv.get_double("beta_true", cfg.beta_true);
    cfg.c = kv.get_double("c", cfg.c);
    cfg.mu = kv.get_double("mu", cfg.mu);
    cfg.var_eps = kv.get_double("var_eps", cfg.var_eps);
    cfg.var_nu = kv.get_double("var_nu", cfg.var_nu);
    cfg.cov_eps_nu = kv.get_double("cov_eps_nu", cfg.cov_eps_nu);
    cfg.misspecify_alice = kv.get_bool("misspecify_alice", cfg.misspecify_alice);
    cfg.freeze_phi = kv.get_bool("freeze_phi", cfg.freeze_phi);
    cfg.theta_mean = kv.get_double("theta_mean", cfg.theta_mean);
    cfg.theta_spread = kv.get_double("theta_spread", cfg.theta_spread);
    cfg.pi_mean = kv.get_double("pi_mean", cfg.pi_mean);
    cfg.pi_spread = kv.get_double("pi_spread", cfg.pi_spread);
    cfg.spread_is_variance = kv.get_bool("spread_is_variance", cfg.spread_is_variance);
    cfg.center_interactions = kv.get_bool("center_interactions", cfg.center_interactions);
    cfg.seed = kv.get_u64("seed", cfg.seed);
    validate_config(cfg);
    return cfg;
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
    return {{"scenario", to_string(cfg.scenario)},
            {"p", cfg.p},
            {"n", cfg.n},
            {"q", cfg.q},
            {"beta_true", cfg.beta_true},
            {"c", cfg.c},
            {"mu", cfg.mu},
            {"var_eps", cfg.var_eps},
            {"var_nu", cfg.var_nu},
            {"cov_eps_nu", cfg.cov_eps_nu},
            {"misspecify_alice", cfg.misspecify_alice},
            {"freeze_phi", cfg.freeze_phi},
            {"theta_mean", cfg.theta_mean},
            {"theta_spread", cfg.theta_spread},
            {"pi_mean", cfg.pi_mean},
            {"pi_spread", cfg.pi_spread},
            {"spread_is_variance", cfg.spread_is_variance},
            {"center_interactions", cfg.center_interactions},
            {"seed", std::to_string(cfg.seed)}};
}

SimulatedData gen_dataset(const ScenarioConfig& cfg, std::uint64_t rep_index) {
    validate_config(cfg);
    const auto p = static_cast<Eigen::Index>(cfg.p);
    const auto n = static_cast<Eigen::Index>(cfg.n);

    SimulatedData out;
    Truth& t = out.truth;
    t.beta = cfg.beta_true;
    t.alpha = cfg.c / std::sqrt(static_cast<double>(cfg.n));
    t.theta = Eigen::VectorXd::Ones(p);
    t.pi = Eigen::VectorXd::Zero(p);
    t.phi = Eigen::MatrixXd::Zero(p, p);

    CounterRng params(derive_key(cfg.seed, rep_index, kParams));
    const double theta_sd = spread_sd(cfg, cfg.theta_spread);
    const double pi_sd = spread_sd(cfg, cfg.pi_spread);
    switch (cfg.scenario) {
        case Scenario::I: {
            const auto invalid = std::min(cfg.p, ceil_percent(cfg.p, 30));
            for (std::size_t j = 0; j < invalid; ++j) t.pi[static_cast<Eigen::Index>(j)] = 0.2;
            break;
        }
        case Scenario::II: {
            const auto block = ceil_percent(cfg.p, 20);
            std::size_t j = 0;
            for (double level : {0.2, 0.4, 0.6})
                for (std::size_t b = 0; b < block && j < cfg.p; ++b, ++j)
                    t.pi[static_cast<Eigen::Index>(j)] = level;
            break;
        }
        case Scenario::III:
        case Scenario::Custom:
            for (Eigen::Index j = 0; j < p; ++j) t.theta[j] = params.normal(cfg.theta_mean, theta_sd);
            for (Eigen::Index j = 0; j < p; ++j) t.pi[j] = params.normal(cfg.pi_mean, pi_sd);
            break;
        case Scenario::IV: {
            for (Eigen::Index j = 0; j < p; ++j) t.theta[j] = params.normal(cfg.theta_mean, theta_sd);
            const auto invalid = std::min(cfg.p, ceil_percent(cfg.p, 70));
            for (std::size_t j = 0; j < invalid; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                t.pi[jj] = t.theta[jj] / 2.0;
            }
            break;
        }
    }

    if (cfg.misspecify_alice) {
        CounterRng phi_rng(derive_key(cfg.seed, cfg.freeze_phi ? kFrozenRep : rep_index, kPhi));
        for (Eigen::Index j = 0; j < p; ++j)
            for (Eigen::Index k = j + 1; k < p; ++k) t.phi(j, k) = phi_rng.normal(1.0, 1.0) * t.alpha;
    }

    Dataset& ds = out.data;
    ds.z.resize(n, p);
    CounterRng zr(derive_key(cfg.seed, rep_index, kInstruments));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) ds.z(i, j) = zr.bernoulli(cfg.mu) ? 1.0 : 0.0;

    const double l11 = std::sqrt(cfg.var_eps);
    const double l21 = cfg.cov_eps_nu / l11;
    const double l22 = std::sqrt(cfg.var_nu - l21 * l21);
    CounterRng er(derive_key(cfg.seed, rep_index, kErrors));

    ds.y.resize(n);
    ds.d.resize(n);
    const double shift = cfg.center_interactions ? cfg.mu : 0.0;
    Eigen::VectorXd zc(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e1 = er.normal();
        const double e2 = er.normal();
        const double eps = l11 * e1;
        const double nu = l21 * e1 + l22 * e2;
        zc = ds.z.row(i).transpose().array() - shift;
        // sum_{j<k} zc_j zc_k from the square of the sum
        const double pair_sum = 0.5 * (zc.sum() * zc.sum() - zc.squaredNorm());
        const double d = ds.z.row(i).dot(t.theta) + t.alpha * pair_sum + nu;
        double y_direct = ds.z.row(i).dot(t.pi) + eps;
        if (cfg.misspecify_alice)
            for (Eigen::Index j = 0; j < p; ++j)
                for (Eigen::Index k = j + 1; k < p; ++k) y_direct += t.phi(j, k) * zc[j] * zc[k];
        ds.d[i] = d;
        ds.y[i] = t.beta * d + y_direct;
    }
    ds.instrument_names.reserve(cfg.p);
    for (std::size_t j = 0; j < cfg.p; ++j) ds.instrument_names.push_back("z" + std::to_string(j + 1));
    return out;
}

McSettings mc_settings_from_kv(const KeyValues& kv) {
    McSettings s;
    const long long reps = kv.get_int("reps", static_cast<long long>(s.reps));
    if (reps < 1) throw config_error(kModule, "reps must be >= 1");
    s.reps = static_cast<std::size_t>(reps);
    s.methods = kv.get_list("methods", s.methods);
    if (s.methods.empty()) throw config_error(kModule, "methods must name at least one estimator");
    for (const auto& m : s.methods) {
        bool known = false;
        for (const auto& k : known_methods()) known = known || k == m;
        if (!known) throw config_error(kModule, "unknown method '" + m + "'");
    }
    s.cue.bounds.lo = kv.get_double("b_lo", s.cue.bounds.lo);
    s.cue.bounds.hi = kv.get_double("b_hi", s.cue.bounds.hi);
    s.cue.grid_points = static_cast<int>(kv.get_int("grid_points", s.cue.grid_points));
    s.cue.tol = kv.get_double("tol", s.cue.tol);
    s.cue.ci_level = kv.get_double("ci_level", s.cue.ci_level);
    s.cue.ridge = kv.get_double("ridge", s.cue.ridge);
    s.alpha = kv.get_double("alpha", s.alpha);
    const auto pair = kv.get_list("ratio_pair", {"0", "1"});
    if (pair.size() != 2) throw config_error(kModule, "ratio_pair needs two indices, e.g. 0,1");
    KeyValues tmp;
    tmp.set("j", pair[0]);
    tmp.set("k", pair[1]);
    s.ratio_j = static_cast<std::size_t>(tmp.get_u64("j", 0));
    s.ratio_k = static_cast<std::size_t>(tmp.get_u64("k", 1));
    const long long workers = kv.get_int("workers", 1);
    if (workers < 1) throw config_error(kModule, "workers must be >= 1");
    s.workers = static_cast<std::size_t>(workers);

    if (!(s.cue.bounds.lo < s.cue.bounds.hi)) throw config_error(kModule, "b_lo must be < b_hi");
    if (s.cue.grid_points < 3) throw config_error(kModule, "grid_points must be >= 3");
    if (!(s.cue.tol > 0.0)) throw config_error(kModule, "tol must be > 0");
    if (!(s.cue.ci_level > 0.0 && s.cue.ci_level < 1.0)) throw config_error(kModule, "ci_level must lie in (0, 1)");
    if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw config_error(kModule, "alpha must lie in (0, 1)");
    if (s.cue.ridge < 0.0) throw config_error(kModule, "ridge must be >= 0");
    return s;
}

nlohmann::json mc_settings_to_json(const McSettings& s) {
    std::string methods;
    for (const auto& m : s.methods) methods += (methods.empty() ? "" : ",") + m;
    return {{"reps", s.reps},
            {"methods", methods},
            {"b_lo", s.cue.bounds.lo},
            {"b_hi", s.cue.bounds.hi},
            {"grid_points", s.cue.grid_points},
            {"tol", s.cue.tol},
            {"ci_level", s.cue.ci_level},
            {"ridge", s.cue.ridge},
            {"alpha", s.alpha},
            {"ratio_pair", std::to_string(s.ratio_j) + "," + std::to_string(s.ratio_k)}};
}

McSummary run_monte_carlo(const ScenarioConfig& cfg, const McSettings& settings) {
    validate_config(cfg);
    if (settings.reps < 1) throw config_error(kModule, "reps must be >= 1");
    const double z_crit = normal_critical(settings.cue.ci_level);

    std::vector<RepRecord> records(settings.reps);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t rep = next++; rep < settings.reps; rep = next++)
            records[rep] = run_replication(cfg, settings, rep, z_crit);
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(settings.workers, settings.reps));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    McSummary summary;
    summary.config = cfg;
    summary.settings = settings;
    summary.reps = settings.reps;

    double f_sum = 0.0;
    std::size_t f_count = 0;
    for (const auto& rec : records) {
        if (std::isfinite(rec.f_stat)) {
            f_sum += rec.f_stat;
            ++f_count;
        }
    }
    summary.f_failures = settings.reps - f_count;
    summary.mean_f_stat = f_count > 0 ? f_sum / static_cast<double>(f_count) : kNaN;

    for (std::size_t m = 0; m < settings.methods.size(); ++m) {
        MethodSummary ms;
        ms.method = settings.methods[m];
        ms.mean_f_stat = summary.mean_f_stat;
        double sum_beta = 0.0, sum_se = 0.0, covered = 0.0;
        std::size_t rejections = 0, tested = 0;
        for (const auto& rec : records) {
            const auto& o = rec.methods[m];
            if (!o.ok) {
                ++ms.excluded;
                if (ms.first_error.empty()) ms.first_error = o.error;
                continue;
            }
            ++ms.used;
            sum_beta += o.beta;
            sum_se += o.se;
            covered += o.covers ? 1.0 : 0.0;
            if (o.reject >= 0) {
                ++tested;
                rejections += static_cast<std::size_t>(o.reject);
            }
        }
        if (ms.used > 0) {
            const double used = static_cast<double>(ms.used);
            const double mean_beta = sum_beta / used;
            double ss = 0.0;
            for (const auto& rec : records)
                if (rec.methods[m].ok) ss += (rec.methods[m].beta - mean_beta) * (rec.methods[m].beta - mean_beta);
            ms.abs_bias = std::abs(mean_beta - cfg.beta_true);
            ms.sd = ms.used > 1 ? std::sqrt(ss / (used - 1.0)) : 0.0;
            ms.mean_se = sum_se / used;
            ms.coverage = covered / used;
        } else {
            ms.abs_bias = ms.sd = ms.mean_se = ms.coverage = kNaN;
        }
        if (tested > 0) ms.overid_rejection_rate = static_cast<double>(rejections) / static_cast<double>(tested);
        if (static_cast<double>(ms.excluded) > 0.05 * static_cast<double>(settings.reps))
            summary.within_exclusion_limit = false;
        summary.methods.push_back(std::move(ms));
    }
    return summary;
}

void check_exclusions(const McSummary& summary) {
    for (const auto& m : summary.methods) {
        if (static_cast<double>(m.excluded) > 0.05 * static_cast<double>(summary.reps)) {
            throw Error(ErrorKind::Exclusions, kModule,
                        m.method + ": " + std::to_string(m.excluded) + " of " +
                            std::to_string(summary.reps) + " replications failed (limit 5%); first error: " +
                            m.first_error);
        }
    }
}

nlohmann::json summary_to_json(const McSummary& s) {
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    nlohmann::json methods = nlohmann::json::object();
    for (const auto& m : s.methods) {
        nlohmann::json e = {{"abs_bias", num(m.abs_bias)},
                            {"sd", num(m.sd)},
                            {"mean_se", num(m.mean_se)},
                            {"coverage_95", num(m.coverage)},
                            {"mean_f_stat", num(m.mean_f_stat)},
                            {"used", m.used},
                            {"excluded", m.excluded}};
        e["overid_rejection_rate"] = m.overid_rejection_rate ? num(*m.overid_rejection_rate) : nullptr;
        if (!m.first_error.empty()) e["first_error"] = m.first_error;
        methods[m.method] = std::move(e);
    }
    nlohmann::json config = scenario_to_json(s.config);
    config.update(mc_settings_to_json(s.settings));
    return {{"schema_version", kSchemaVersion},
            {"reps", s.reps},
            {"methods", std::move(methods)},
            {"mean_f_stat", num(s.mean_f_stat)},
            {"f_failures", s.f_failures},
            {"within_exclusion_limit", s.within_exclusion_limit},
            {"config", std::move(config)}};
}

std::string summary_table(const McSummary& s) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "Scenario %s, p=%zu, n=%zu, q=%d, c=%.2f, reps=%zu\n",
                  to_string(s.config.scenario).c_str(), s.config.p, s.config.n, s.config.q, s.config.c, s.reps);
    out += line;
    std::snprintf(line, sizeof(line), "%-18s %8s %8s %8s %14s\n", "Method", "|Bias|", "SD", "Mean SE",
                  "Coverage(95%)");
    out += line;
    for (const auto& m : s.methods) {
        std::snprintf(line, sizeof(line), "%-18s %8.3f %8.3f %8.3f %14.3f\n", m.method.c_str(), m.abs_bias,
                      m.sd, m.mean_se, m.coverage);
        out += line;
    }
    std::snprintf(line, sizeof(line), "mean F_%d = %.3f", s.config.q, s.mean_f_stat);
    out += line;
    for (const auto& m : s.methods) {
        if (m.overid_rejection_rate) {
            std::snprintf(line, sizeof(line), "; %s overid rejection (alpha=%.2f) = %.3f", m.method.c_str(),
                          s.settings.alpha, *m.overid_rejection_rate);
            out += line;
        }
    }
    out += "\n";
    for (const auto& m : s.methods) {
        if (m.excluded > 0) {
            std::snprintf(line, sizeof(line), "%s: %zu replications excluded\n", m.method.c_str(), m.excluded);
            out += line;
        }
    }
    return out;
}

}  // namespace magic
