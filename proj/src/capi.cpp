#include "magic.h"

#include "data.hpp"
#include "error.hpp"
#include "estimate.hpp"
#include "keyvalue.hpp"
#include "simulate.hpp"
#include "workflows.hpp"

#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

struct magic_dataset {
    magic::Dataset data;
};

struct magic_result {
    magic::MagicFit fit;
};

namespace {

thread_local std::string last_error;

magic_status status_of(magic::ErrorKind kind) {
    switch (kind) {
        case magic::ErrorKind::Data: return MAGIC_ERR_DATA;
        case magic::ErrorKind::Numerical: return MAGIC_ERR_NUMERICAL;
        case magic::ErrorKind::Config: return MAGIC_ERR_CONFIG;
        case magic::ErrorKind::Guard: return MAGIC_ERR_GUARD;
        case magic::ErrorKind::Exclusions: return MAGIC_ERR_EXCLUSIONS;
    }
    return MAGIC_ERR_INTERNAL;
}

magic_status fail(magic_status status, const std::string& message) {
    last_error = message;
    return status;
}

template <class F>
magic_status guarded(F&& body) {
    try {
        last_error.clear();
        return body();
    } catch (const magic::Error& e) {
        return fail(status_of(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(MAGIC_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(MAGIC_ERR_INTERNAL, e.what());
    }
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

extern "C" {

const char* magic_version(void) { return "1.0.0"; }

const char* magic_status_name(magic_status status) {
    switch (status) {
        case MAGIC_OK: return "ok";
        case MAGIC_ERR_DATA: return "data error";
        case MAGIC_ERR_NUMERICAL: return "numerical error";
        case MAGIC_ERR_CONFIG: return "configuration error";
        case MAGIC_ERR_GUARD: return "size guard exceeded";
        case MAGIC_ERR_EXCLUSIONS: return "too many excluded replications";
        case MAGIC_ERR_ARGUMENT: return "invalid argument";
        case MAGIC_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* magic_last_error(void) { return last_error.c_str(); }

void magic_string_free(char* s) { std::free(s); }

magic_status magic_dataset_load_csv(const char* path, const char* outcome, const char* exposure,
                                    const char* const* instruments, size_t n_instruments, int strict_binary,
                                    magic_dataset** out) {
    if (!path || !outcome || !exposure || !out || (n_instruments > 0 && !instruments))
        return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        magic::CsvBinding binding{outcome, exposure, {}};
        for (size_t j = 0; j < n_instruments; ++j) {
            if (!instruments[j]) return fail(MAGIC_ERR_ARGUMENT, "null instrument name");
            binding.instruments.emplace_back(instruments[j]);
        }
        if (binding.instruments.empty())
            for (const auto& name : magic::read_csv_header(path))
                if (name != binding.outcome && name != binding.exposure) binding.instruments.push_back(name);
        auto ds = magic::load_csv(path, binding, strict_binary != 0);
        *out = new magic_dataset{std::move(ds)};
        return MAGIC_OK;
    });
}

magic_status magic_dataset_from_arrays(const double* y, const double* d, const double* z, size_t n, size_t p,
                                       magic_dataset** out) {
    if (!y || !d || !z || !out) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const auto nn = static_cast<Eigen::Index>(n);
        const auto pp = static_cast<Eigen::Index>(p);
        magic::Dataset ds;
        ds.y = Eigen::Map<const Eigen::VectorXd>(y, nn);
        ds.d = Eigen::Map<const Eigen::VectorXd>(d, nn);
        ds.z = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(z, nn, pp);
        for (size_t j = 0; j < p; ++j) ds.instrument_names.push_back("z" + std::to_string(j + 1));
        *out = new magic_dataset{std::move(ds)};
        return MAGIC_OK;
    });
}

magic_status magic_dataset_write_csv(const magic_dataset* ds, const char* path) {
    if (!ds || !path) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        magic::write_csv(ds->data, path);
        return MAGIC_OK;
    });
}

void magic_dataset_free(magic_dataset* ds) { delete ds; }

size_t magic_dataset_n(const magic_dataset* ds) { return ds ? ds->data.n() : 0; }

size_t magic_dataset_p(const magic_dataset* ds) { return ds ? ds->data.p() : 0; }

magic_status magic_dataset_validate(const magic_dataset* ds, int strict_binary, char** report_json) {
    if (!ds || !report_json) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : magic::validate(ds->data, strict_binary != 0)) {
            nlohmann::json e = {{"code", v.code}, {"column", v.column}, {"message", v.message}};
            e["row"] = v.row >= 0 ? nlohmann::json(v.row) : nlohmann::json(nullptr);
            arr.push_back(std::move(e));
        }
        *report_json = copy_string(dump(arr));
        return MAGIC_OK;
    });
}

magic_status magic_simulate_dataset(const char* config_text, uint64_t rep, magic_dataset** out) {
    if (!config_text || !out) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const auto kv = magic::KeyValues::parse(config_text);
        const auto cfg = magic::scenario_from_kv(kv);
        // study keys are validated so one config serves both uses
        (void)magic::mc_settings_from_kv(kv);
        kv.require_all_used("simulate");
        *out = new magic_dataset{magic::gen_dataset(cfg, rep).data};
        return MAGIC_OK;
    });
}

void magic_options_default(magic_options* opts) {
    if (!opts) return;
    const magic::CueOptions cue;
    opts->q = 2;
    opts->b_lo = cue.bounds.lo;
    opts->b_hi = cue.bounds.hi;
    opts->grid_points = cue.grid_points;
    opts->tol = cue.tol;
    opts->ci_level = cue.ci_level;
    opts->ridge = cue.ridge;
}

magic_status magic_fit(const magic_dataset* ds, const magic_options* opts, magic_result** out) {
    if (!ds || !out) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        magic_options o;
        magic_options_default(&o);
        if (opts) o = *opts;
        magic::CueOptions cue;
        cue.bounds = {o.b_lo, o.b_hi};
        cue.grid_points = o.grid_points;
        cue.tol = o.tol;
        cue.ci_level = o.ci_level;
        cue.ridge = o.ridge;
        *out = new magic_result{magic::fit_magic(ds->data, o.q, cue)};
        return MAGIC_OK;
    });
}

void magic_result_free(magic_result* res) { delete res; }

double magic_result_beta(const magic_result* res) { return res ? res->fit.cue.beta_hat : kNaN; }
double magic_result_se(const magic_result* res) { return res ? res->fit.cue.se : kNaN; }
double magic_result_ci_low(const magic_result* res) { return res ? res->fit.cue.ci_low : kNaN; }
double magic_result_ci_high(const magic_result* res) { return res ? res->fit.cue.ci_high : kNaN; }
double magic_result_q_min(const magic_result* res) { return res ? res->fit.cue.q_min : kNaN; }

double magic_result_j_stat(const magic_result* res) {
    return res && res->fit.cue.overid.applicable ? res->fit.cue.overid.j_stat : kNaN;
}

double magic_result_j_pvalue(const magic_result* res) {
    return res && res->fit.cue.overid.applicable ? res->fit.cue.overid.p_value : kNaN;
}

size_t magic_result_r(const magic_result* res) { return res ? res->fit.cue.r : 0; }
int magic_result_boundary(const magic_result* res) { return res && res->fit.cue.boundary_flag ? 1 : 0; }
int magic_result_ridge_used(const magic_result* res) { return res && res->fit.cue.ridge_used ? 1 : 0; }

magic_status magic_result_to_json(const magic_result* res, char** json) {
    if (!res || !json) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        magic::EstimateReport report;
        report.fit = res->fit;
        report.p = res->fit.plan.p();
        const double r = static_cast<double>(res->fit.plan.r());
        const double n = static_cast<double>(res->fit.cue.n);
        report.r2_over_n = r * r / n;
        report.r3_over_n = r * r * r / n;
        report.f_stat_error = "not computed";
        *json = copy_string(dump(magic::report_to_json(report, nlohmann::json::object())));
        return MAGIC_OK;
    });
}

magic_status magic_config_merge(const char* base_text, const char* overrides_text, char** merged) {
    if (!base_text || !overrides_text || !merged) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        auto kv = magic::KeyValues::parse(base_text);
        kv.merge(magic::KeyValues::parse(overrides_text));
        *merged = copy_string(kv.to_text());
        return MAGIC_OK;
    });
}

magic_status magic_run_estimate(const char* config_text, char** json_out) {
    if (!config_text || !json_out) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        *json_out = copy_string(dump(magic::estimate_workflow(magic::KeyValues::parse(config_text))));
        return MAGIC_OK;
    });
}

magic_status magic_run_simulate(const char* config_text, size_t workers, char** json_out, char** table_out) {
    if (!config_text || !json_out) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        auto kv = magic::KeyValues::parse(config_text);
        if (workers > 0) kv.set("workers", std::to_string(workers));
        const auto out = magic::simulate_workflow(kv);
        *json_out = copy_string(dump(out.summary));
        if (table_out) *table_out = copy_string(out.table);
        if (!out.exclusion_error.empty()) return fail(MAGIC_ERR_EXCLUSIONS, out.exclusion_error);
        return MAGIC_OK;
    });
}

magic_status magic_run_oracle_check(const char* config_text, char** json_out, char** text_out, int* passed) {
    if (!config_text || !json_out) return fail(MAGIC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const auto out = magic::oracle_workflow(magic::KeyValues::parse(config_text));
        *json_out = copy_string(dump(out.report));
        if (text_out) *text_out = copy_string(out.text);
        if (passed) *passed = out.pass ? 1 : 0;
        return MAGIC_OK;
    });
}

}  // extern "C"
