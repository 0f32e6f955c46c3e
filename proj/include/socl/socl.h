/*
 * socl: social-interaction clustering of course discussion participants.
 *
 * C interface over opaque handles. Every fallible call returns a socl_status;
 * on failure socl_last_error() describes the problem for the calling thread.
 * Strings returned through `char**` out-parameters are owned by the caller
 * and released with socl_string_free().
 */
#ifndef SOCL_SOCL_H
#define SOCL_SOCL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SOCL_BUILDING_LIBRARY)
#    define SOCL_API __declspec(dllexport)
#  else
#    define SOCL_API __declspec(dllimport)
#  endif
#else
#  define SOCL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum socl_status {
  SOCL_OK = 0,
  SOCL_ERR_INVALID_ARGUMENT = 1,
  SOCL_ERR_IO = 2,
  SOCL_ERR_PARSE = 3,
  SOCL_ERR_DATA_INTEGRITY = 4,
  SOCL_ERR_STANDARDIZATION = 5,
  SOCL_ERR_INFEASIBLE = 6,
  SOCL_ERR_INTERNAL = 99
} socl_status;

typedef enum socl_format { SOCL_FORMAT_JSON = 0, SOCL_FORMAT_TEXT = 1 } socl_format;

typedef enum socl_denominator {
  SOCL_DENOMINATOR_ALL = 0,     /* every social student, zeros included */
  SOCL_DENOMINATOR_POSTERS = 1  /* only students with >= 1 comment of the type */
} socl_denominator;

typedef enum socl_correction { SOCL_CORRECTION_NONE = 0, SOCL_CORRECTION_HOLM = 1 } socl_correction;

typedef enum socl_init { SOCL_INIT_KMEANSPP = 0, SOCL_INIT_FIRST_K_DISTINCT = 1 } socl_init;

typedef struct socl_log socl_log;
typedef struct socl_features socl_features;
typedef struct socl_report socl_report;
typedef struct socl_cohort_spec socl_cohort_spec;

SOCL_API const char* socl_version(void);
SOCL_API const char* socl_status_name(socl_status status);
/* Message of the last failed call on this thread; "" if none. */
SOCL_API const char* socl_last_error(void);
SOCL_API void socl_string_free(char* s);

/* ---- comment logs ------------------------------------------------------ */

/* strict != 0 rejects logs with dangling parent_id references. */
SOCL_API socl_status socl_log_read_file(const char* path, int strict, socl_log** out);
SOCL_API socl_status socl_log_read_buffer(const char* data, size_t size, int strict, socl_log** out);
SOCL_API socl_status socl_log_write_file(const socl_log* log, const char* path);
SOCL_API size_t socl_log_comment_count(const socl_log* log);
SOCL_API size_t socl_log_warning_count(const socl_log* log);
/* Borrowed pointer, valid while the log lives. NULL when out of range. */
SOCL_API const char* socl_log_warning(const socl_log* log, size_t index);
SOCL_API socl_status socl_log_summary(const socl_log* log, socl_format format, char** out);
SOCL_API void socl_log_free(socl_log* log);

/* ---- per-student feature tables ---------------------------------------- */

SOCL_API socl_status socl_features_from_log(const socl_log* log, socl_features** out);
/* Reads the student_id,n_ice,n_resp,n_solo table format. */
SOCL_API socl_status socl_features_read_file(const char* path, socl_features** out);
SOCL_API size_t socl_features_row_count(const socl_features* features);
SOCL_API socl_status socl_features_to_csv(const socl_features* features, char** out);
/* Descriptive statistics per variable plus the Spearman matrix. */
SOCL_API socl_status socl_features_stats(const socl_features* features, socl_denominator denominator,
                                         socl_format format, char** out);
SOCL_API void socl_features_free(socl_features* features);

/* ---- cluster-count selection ------------------------------------------- */

typedef struct socl_protocol_config {
  size_t k_min;           /* default 2 */
  size_t k_max;           /* 0: 2^d, i.e. 8 for the three variables */
  size_t max_iterations;  /* default 30 */
  double min_cluster_share; /* default 0.005 */
  double alpha;           /* default 0.05 */
  socl_correction correction;
  uint64_t seed;
  size_t restarts;        /* default 10 */
  socl_init init;
  size_t threads;         /* default 1; output does not depend on it */
  int profile;            /* nonzero: persona profiles for the chosen k */
  socl_denominator denominator;
} socl_protocol_config;

SOCL_API void socl_protocol_config_init(socl_protocol_config* config);
SOCL_API socl_status socl_run_protocol(const socl_features* features, const socl_protocol_config* config,
                                       socl_report** out);
/* Chosen k, or 0 when no candidate was fully separated. */
SOCL_API size_t socl_report_chosen_k(const socl_report* report);
SOCL_API socl_status socl_report_render(const socl_report* report, socl_format format, char** out);
/* Writes report.json, report.txt, elbow.tsv and cluster_comparison.tsv. */
SOCL_API socl_status socl_report_write_files(const socl_report* report, const char* directory);
SOCL_API void socl_report_free(socl_report* report);

/* Best-of-restarts WCSS for k in [k_min, k_max]. plot_tsv may be NULL. */
SOCL_API socl_status socl_elbow(const socl_features* features, size_t k_min, size_t k_max, size_t restarts,
                                uint64_t seed, size_t threads, socl_format format, char** out, char** plot_tsv);

/* ---- synthetic cohorts ------------------------------------------------- */

SOCL_API socl_status socl_cohort_spec_read_file(const char* path, socl_cohort_spec** out);
SOCL_API socl_status socl_cohort_spec_read_buffer(const char* data, size_t size, socl_cohort_spec** out);
SOCL_API void socl_cohort_spec_set_seed(socl_cohort_spec* spec, uint64_t seed);
/* Nonzero when the spec asks for a comment log rather than a feature table. */
SOCL_API int socl_cohort_spec_emits_log(const socl_cohort_spec* spec);
SOCL_API void socl_cohort_spec_free(socl_cohort_spec* spec);

/* truth_tsv (may be NULL) receives "student_id<TAB>persona" lines;
 * rebalancing_json (may be NULL) lists budget adjustments. */
SOCL_API socl_status socl_synth_log(const socl_cohort_spec* spec, socl_log** out, char** truth_tsv,
                                    char** rebalancing_json);
SOCL_API socl_status socl_synth_features(const socl_cohort_spec* spec, socl_features** out, char** truth_tsv);

#ifdef __cplusplus
}
#endif

#endif /* SOCL_SOCL_H */
