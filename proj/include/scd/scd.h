#ifndef SCD_H
#define SCD_H

/*
 * C interface to the social-contact debiasing toolkit.
 *
 * Every operation reads and writes files; handles exist only for the two
 * reusable in-memory objects (descriptor catalog, template corpus). All
 * functions return scd_status; on failure scd_last_error() holds a
 * thread-local human-readable message valid until the next failing call on
 * the same thread.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scd_status {
    SCD_OK = 0,
    SCD_E_VALIDATION = 1,   /* input violates a format or coverage rule */
    SCD_E_IO = 2,           /* file unreadable/unwritable or unparseable */
    SCD_E_CONNECTIVITY = 3, /* endpoint unreachable */
    SCD_E_PARTIAL = 4,      /* run finished but some instances failed */
    SCD_E_ARGUMENT = 5,     /* bad option value or unsupported capability */
    SCD_E_INTERNAL = 6      /* unexpected failure */
} scd_status;

const char* scd_last_error(void);

/* Frees strings returned through char** out-parameters. */
void scd_string_free(char* s);

/* --- handles ------------------------------------------------------------- */

typedef struct scd_catalog scd_catalog;
typedef struct scd_corpus scd_corpus;

scd_status scd_catalog_load(const char* path, scd_catalog** out);
void scd_catalog_free(scd_catalog* catalog);
scd_status scd_catalog_count(const scd_catalog* catalog, uint64_t* count_out);

scd_status scd_corpus_load(const char* path, scd_corpus** out);
void scd_corpus_free(scd_corpus* corpus);
/* SCD_OK iff the corpus covers the full template key space exactly once.
 * *report_out (optional) receives the human-readable coverage report. */
scd_status scd_corpus_validate(const scd_corpus* corpus, char** report_out);
scd_status scd_corpus_system_prompt(const scd_corpus* corpus, char** prompt_out);

/* --- dataset generation --------------------------------------------------- */

typedef struct scd_generate_opts {
    const char* corpus_path;
    const char* catalog_path;
    const char* scales; /* comma-separated scale tags; NULL or "" = all three */
    const char* out_path;
} scd_generate_opts;

scd_status scd_generate(const scd_generate_opts* opts, uint64_t* n_sets_out,
                        uint64_t* n_instances_out);

/* --- probing --------------------------------------------------------------- */

typedef struct scd_probe_opts {
    const char* dataset_path;
    const char* out_path;
    /* NULL/"" probes the HTTP endpoint; otherwise always_engage,
     * always_decline, or contact_sensitive. */
    const char* mock;
    const char* base_url;
    const char* model;
    const char* api_key_env;   /* NULL = OPENAI_API_KEY */
    const char* system_prompt; /* NULL = empty */
    double temperature;        /* < 0 = default 0.2 */
    int max_tokens;            /* <= 0 = default 16 */
    int concurrency;           /* <= 0 = default 8 */
    const char* cache_dir;     /* NULL/"" disables the response cache */
    uint64_t seed;             /* contact_sensitive draw seed */
    double p_none;             /* contact_sensitive engage probabilities; */
    double p_pos;              /* values outside [0,1] fall back to 0.5 */
    double p_neg;
    int retry_attempts;        /* <= 0 = default 3 */
    int retry_base_ms;         /* <= 0 = default 1000 */
} scd_probe_opts;

/* Returns SCD_E_PARTIAL (outputs still written) when some instances failed. */
scd_status scd_probe(const scd_probe_opts* opts, uint64_t* n_ok_out, uint64_t* n_failed_out,
                     uint64_t* n_cache_hits_out);

/* --- scoring ---------------------------------------------------------------- */

typedef struct scd_score_opts {
    const char* dataset_path;
    const char* responses_path;
    const char* out_dir;     /* receives records.jsonl, stats.*, alignment.json */
    const char* group_by;    /* comma-separated axes; NULL = whole run */
    const char* denominator; /* NULL = "determinate"; or "total" */
    const char* format;      /* NULL = "csv"; or "md" */
    const char* model_label; /* NULL = unlabeled */
    double epsilon;          /* alignment margin; < 0 = 0 */
} scd_score_opts;

scd_status scd_score(const scd_score_opts* opts, uint64_t* n_records_out,
                     uint64_t* skipped_failed_out);

/* --- splits ------------------------------------------------------------------ */

typedef struct scd_split_opts {
    const char* dataset_path;
    const char* out_dir; /* receives split.json, instructions.jsonl, manifests, config */
    int setting;         /* 1..8 */
    uint64_t seed;
    int64_t train_n;                /* < 0 = setting default */
    int64_t val_n;                  /* < 0 = setting default */
    const char* alt_dataset_path;   /* setting 2 test pool */
    const char* train_dimensions;   /* comma tags; NULL = default six (setting 8) */
    const char* system_prompt;      /* system text for instruction examples */
} scd_split_opts;

scd_status scd_split(const scd_split_opts* opts, uint64_t* train_out, uint64_t* val_out,
                     uint64_t* test_out);

scd_status scd_emit_training_config(const char* out_path);

/* --- run comparison ----------------------------------------------------------- */

typedef struct scd_compare_opts {
    const char* before_stats_path; /* stats.json emitted by scd_score */
    const char* after_stats_path;
    const char* out_path;
    const char* format; /* NULL = "csv"; or "md" */
} scd_compare_opts;

scd_status scd_compare(const scd_compare_opts* opts, uint64_t* n_groups_out);

/* --- BBQ evaluation ------------------------------------------------------------ */

typedef struct scd_bbq_opts {
    const char* items_path;
    const char* out_path;
    const char* mock; /* NULL/"" = http; or "gold" / "uniform" */
    const char* base_url;
    const char* model;
    const char* api_key_env;
    const char* mode;   /* NULL = "letter"; "option_score" needs likelihoods */
    const char* filter; /* NULL = "ambiguous"; "disambiguated"; "all" */
    int concurrency;    /* <= 0 = default 8 */
    const char* cache_dir;
    uint64_t seed;      /* uniform mock seed */
    const char* label;  /* row label in the result table; NULL = "run" */
    const char* format; /* NULL = "md"; or "csv" */
} scd_bbq_opts;

scd_status scd_bbq(const scd_bbq_opts* opts, double* accuracy_out, uint64_t* n_items_out);

#ifdef __cplusplus
}
#endif

#endif /* SCD_H */
