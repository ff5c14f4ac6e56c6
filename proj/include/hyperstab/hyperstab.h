/* C interface to the hyperstab experiment runner. */
#ifndef HYPERSTAB_H
#define HYPERSTAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define HS_API __declspec(dllexport)
#else
#define HS_API __attribute__((visibility("default")))
#endif

/* Also the process exit codes of the command line tool. */
typedef enum hs_status {
    HS_OK = 0,
    HS_FAILED = 1,          /* an experiment ran and failed its check */
    HS_ERR_CONFIG = 2,      /* bad configuration or usage */
    HS_ERR_INPUT = 3,       /* malformed or missing input data */
    HS_ERR_NUMERIC = 4,     /* a numerical method did not converge or lost accuracy */
    HS_ERR_DYNAMICS = 5,    /* blow-up, safety margin or lattice violation during a run */
    HS_ERR_IO = 6,          /* output could not be written */
    HS_ERR_BUDGET = 7,      /* an evaluation budget ran out */
    HS_ERR_UNSUPPORTED = 8  /* requested feature outside the supported range */
} hs_status;

typedef struct hs_summary hs_summary;

HS_API const char* hs_version(void);
/* Message of the last failing call on this thread, "" if none. */
HS_API const char* hs_last_error(void);
/* Newline separated experiment ids and preset names. */
HS_API const char* hs_experiment_names(void);
HS_API const char* hs_preset_names(void);

/* config_json: one run object, an array of them, or {"runs": [...]}.
   Returns HS_OK when a summary was produced; experiment failures are inside it. */
HS_API hs_status hs_run(const char* config_json, hs_summary** out);
/* threads == 0 uses the HYPERSTAB_THREADS cap. */
HS_API hs_status hs_sweep(const char* configs_json, unsigned threads, hs_summary** out);
HS_API hs_status hs_run_preset(const char* name, const char* out_dir, hs_summary** out);

HS_API size_t hs_summary_size(const hs_summary* s);
HS_API int hs_summary_exit_code(const hs_summary* s);
/* Strings stay valid until hs_summary_free. */
HS_API const char* hs_summary_json(const hs_summary* s);
HS_API const char* hs_summary_table(const hs_summary* s);
HS_API const char* hs_summary_id(const hs_summary* s, size_t entry);
HS_API const char* hs_summary_status(const hs_summary* s, size_t entry);
/* NaN when the entry or scalar is missing. */
HS_API double hs_summary_scalar(const hs_summary* s, size_t entry, const char* name);
/* NULL when missing. */
HS_API const char* hs_summary_note(const hs_summary* s, size_t entry, const char* name);
/* Writes summary.json and summary.csv into dir. */
HS_API hs_status hs_summary_write(const hs_summary* s, const char* dir);
HS_API void hs_summary_free(hs_summary* s);

/* Scaled index of a row-major n x n matrix; p is "1", "2", "inf", a number, or "zero". */
HS_API hs_status hs_rho_hat(const double* entries, size_t n, const char* p, uint64_t seed, double* value);

#ifdef __cplusplus
}
#endif

#endif
