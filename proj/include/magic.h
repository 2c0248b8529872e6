#ifndef MAGIC_H
#define MAGIC_H

#include <stddef.h>
#include <stdint.h>

#if defined(MAGIC_BUILDING_LIBRARY)
#define MAGIC_API __attribute__((visibility("default")))
#else
#define MAGIC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum magic_status {
    MAGIC_OK = 0,
    MAGIC_ERR_DATA = 1,
    MAGIC_ERR_NUMERICAL = 2,
    MAGIC_ERR_CONFIG = 3,
    MAGIC_ERR_GUARD = 4,
    MAGIC_ERR_EXCLUSIONS = 5,
    MAGIC_ERR_ARGUMENT = 6,
    MAGIC_ERR_INTERNAL = 7
} magic_status;

typedef struct magic_dataset magic_dataset;
typedef struct magic_result magic_result;

typedef struct magic_options {
    int q;
    double b_lo;
    double b_hi;
    int grid_points;
    double tol;
    double ci_level;
    double ridge; /* initial ridge; escalated automatically when Omega is ill conditioned */
} magic_options;

MAGIC_API const char* magic_version(void);
MAGIC_API const char* magic_status_name(magic_status status);

/* Message of the last failed call on this thread, "" if none. */
MAGIC_API const char* magic_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
MAGIC_API void magic_string_free(char* s);

/* instruments may be NULL (n_instruments = 0) to use every column except
   the outcome and exposure. */
MAGIC_API magic_status magic_dataset_load_csv(const char* path, const char* outcome, const char* exposure,
                                              const char* const* instruments, size_t n_instruments,
                                              int strict_binary, magic_dataset** out);
/* z is row-major n x p. */
MAGIC_API magic_status magic_dataset_from_arrays(const double* y, const double* d, const double* z, size_t n,
                                                 size_t p, magic_dataset** out);
MAGIC_API magic_status magic_dataset_write_csv(const magic_dataset* ds, const char* path);
MAGIC_API void magic_dataset_free(magic_dataset* ds);
MAGIC_API size_t magic_dataset_n(const magic_dataset* ds);
MAGIC_API size_t magic_dataset_p(const magic_dataset* ds);
/* JSON array of violations; MAGIC_OK even when violations are found. */
MAGIC_API magic_status magic_dataset_validate(const magic_dataset* ds, int strict_binary, char** report_json);

/* Replication rep of a simulation scenario given as key = value text. */
MAGIC_API magic_status magic_simulate_dataset(const char* config_text, uint64_t rep, magic_dataset** out);

MAGIC_API void magic_options_default(magic_options* opts);
MAGIC_API magic_status magic_fit(const magic_dataset* ds, const magic_options* opts, magic_result** out);
MAGIC_API void magic_result_free(magic_result* res);
MAGIC_API double magic_result_beta(const magic_result* res);
MAGIC_API double magic_result_se(const magic_result* res);
MAGIC_API double magic_result_ci_low(const magic_result* res);
MAGIC_API double magic_result_ci_high(const magic_result* res);
MAGIC_API double magic_result_q_min(const magic_result* res);
/* NaN when the overidentification test is not applicable (r = 1). */
MAGIC_API double magic_result_j_stat(const magic_result* res);
MAGIC_API double magic_result_j_pvalue(const magic_result* res);
MAGIC_API size_t magic_result_r(const magic_result* res);
MAGIC_API int magic_result_boundary(const magic_result* res);
MAGIC_API int magic_result_ridge_used(const magic_result* res);
MAGIC_API magic_status magic_result_to_json(const magic_result* res, char** json);

/* Merges two configurations (flat key = value text or a JSON object, whose
   "config" member is used when present); keys in overrides win. The result
   is key = value text. */
MAGIC_API magic_status magic_config_merge(const char* base_text, const char* overrides_text, char** merged);

/* Workflows driven by key = value (or JSON) configuration text. */
MAGIC_API magic_status magic_run_estimate(const char* config_text, char** json_out);
/* On MAGIC_ERR_EXCLUSIONS the summary and table are still returned. */
MAGIC_API magic_status magic_run_simulate(const char* config_text, size_t workers, char** json_out,
                                          char** table_out);
/* *passed receives 1 when the check passes (or fails as expected). */
MAGIC_API magic_status magic_run_oracle_check(const char* config_text, char** json_out, char** text_out,
                                              int* passed);

#ifdef __cplusplus
}
#endif

#endif
