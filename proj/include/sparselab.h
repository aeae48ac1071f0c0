/* C API of the sparselab shared library.
 *
 * All functions return sl_status (SL_OK on success) unless noted; on error
 * a thread-local message is available via sl_last_error(). Objects are
 * opaque handles freed with their matching *_free function.
 */
#ifndef SPARSELAB_H
#define SPARSELAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SL_API __declspec(dllexport)
#else
#define SL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  SL_OK = 0,
  SL_ERR_INVALID_ARGUMENT = 1,
  SL_ERR_CONFIG = 2,
  SL_ERR_NUMERIC = 3,
  SL_ERR_IO = 4,
  SL_ERR_DIVERGED = 5,
  SL_ERR_INTERNAL = 6
} sl_status;

typedef struct sl_config sl_config;
typedef struct sl_report sl_report;

SL_API const char* sl_version(void);
SL_API const char* sl_last_error(void);

/* --- configuration ------------------------------------------------------ */

SL_API sl_config* sl_config_create(void);
SL_API sl_status sl_config_load(sl_config* cfg, const char* path);
SL_API sl_status sl_config_set(sl_config* cfg, const char* key, const char* value);
/* Returns a string owned by the config, valid until the next call on it. */
SL_API const char* sl_config_get(sl_config* cfg, const char* key);
SL_API void sl_config_free(sl_config* cfg);

/* --- experiments -------------------------------------------------------- */

SL_API sl_status sl_run_experiment(const sl_config* cfg, sl_report** out);
SL_API sl_status sl_sweep(const sl_config* cfg, const char* axis,
                          const double* values, size_t n_values,
                          sl_report** out);
SL_API sl_status sl_se_run(const sl_config* cfg, sl_report** out);
SL_API sl_status sl_gfa_run(const sl_config* cfg, sl_report** out);
SL_API sl_status sl_verify_df(const sl_config* cfg, sl_report** out);
SL_API sl_status sl_verify_lemma2(const sl_config* cfg, sl_report** out);

/* --- reports ------------------------------------------------------------ */

/* Strings owned by the report; NULL when the report has no such view. */
SL_API const char* sl_report_csv(const sl_report* rep);
SL_API const char* sl_report_json(const sl_report* rep);
/* 1 if every declared acceptance threshold passed, else 0. */
SL_API int sl_report_passed(const sl_report* rep);
SL_API sl_status sl_report_write(const sl_report* rep, const char* csv_path,
                                 const char* json_path);
SL_API void sl_report_free(sl_report* rep);

/* --- problem instances -------------------------------------------------- */

/* Generate an instance from the config (n, delta, sigma0_2, prior, seed)
 * and dump it in the binary instance format. */
SL_API sl_status sl_instance_dump(const sl_config* cfg, const char* path);
/* Read back the header of a dumped instance; any out pointer may be NULL. */
SL_API sl_status sl_instance_info(const char* path, uint64_t* m, uint64_t* n,
                                  uint64_t* seed, double* sigma0_2);

#ifdef __cplusplus
}
#endif

#endif /* SPARSELAB_H */
