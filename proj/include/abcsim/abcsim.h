/* C interface to the ABC long-jump simulator. */
#ifndef ABCSIM_H
#define ABCSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ABC_API __declspec(dllexport)
#else
#define ABC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    ABC_OK = 0,
    ABC_ERR_ARGUMENT = 1,  /* null handle or out-of-range index */
    ABC_ERR_PARAMETER = 2, /* model invariant violated */
    ABC_ERR_CONFIG = 3,    /* malformed or inconsistent configuration */
    ABC_ERR_IO = 4,        /* missing, unreadable or mixed files */
    ABC_ERR_NUMERIC = 5,   /* quadrature or series did not converge */
    ABC_ERR_INTERNAL = 6
} abc_status;

typedef struct abc_config abc_config;
typedef struct abc_table abc_table;

/* One row of a result table (validation checks or test battery). Strings are owned by the table. */
typedef struct {
    const char* name;
    double estimate;
    double reference;
    double se;
    double z;
    double threshold;
    int pass;
    const char* detail;
} abc_row;

typedef struct {
    double delta;
    double lambda[2]; /* [0] = plus, [1] = minus */
    double d2[2];
    double d3[2];
    double v[2];
    double kappa[2];
    double d4, d5[2], d6[2];
    double theta_n, m_a, k_n, k_star;
} abc_constants;

typedef void (*abc_progress_fn)(int n, size_t done, size_t total, void* user);

/* Message of the last failed call on this thread ("" if none). */
ABC_API const char* abc_last_error(void);
ABC_API const char* abc_version(void);
ABC_API const char* abc_status_name(abc_status s);

ABC_API abc_status abc_config_default(abc_config** out);
ABC_API abc_status abc_config_parse(const char* json_text, abc_config** out);
ABC_API abc_status abc_config_load(const char* path, abc_config** out);
ABC_API void abc_config_free(abc_config* c);
ABC_API abc_status abc_config_set_seed(abc_config* c, uint64_t seed);
ABC_API abc_status abc_config_set_threads(abc_config* c, int threads);
ABC_API abc_status abc_config_set_out(abc_config* c, const char* dir);
ABC_API abc_status abc_config_out(const abc_config* c, const char** dir);
/* Serialized config; release with abc_string_free. */
ABC_API abc_status abc_config_to_json(const abc_config* c, char** json_text);
ABC_API void abc_string_free(char* s);
/* Normal-mode constants at scale n (0: largest configured n). */
ABC_API abc_status abc_config_constants(const abc_config* c, int n, abc_constants* out);

/* Deterministic suite; broken_rates != 0 injects rates violating pairwise balance. */
ABC_API abc_status abc_validate(int broken_rates, abc_table** out);
/* Ensemble simulation into dir (NULL: the configured out directory). */
ABC_API abc_status abc_simulate(const abc_config* c, const char* dir, abc_progress_fn progress, void* user);
/* Runs the test battery on a simulate output directory and writes battery.csv.
   tests_from (nullable) supplies the tests; otherwise those in the manifest or the default battery. */
ABC_API abc_status abc_analyze(const char* dir, const abc_config* tests_from, abc_table** out);
/* Writes report.txt from battery.csv; *text is released with abc_string_free. */
ABC_API abc_status abc_report(const char* dir, char** text, int* all_pass);

ABC_API size_t abc_table_size(const abc_table* t);
ABC_API abc_status abc_table_row(const abc_table* t, size_t i, abc_row* row);
ABC_API int abc_table_all_pass(const abc_table* t);
ABC_API void abc_table_free(abc_table* t);

#ifdef __cplusplus
}
#endif

#endif
