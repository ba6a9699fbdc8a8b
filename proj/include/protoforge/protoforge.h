/* protoforge — adaptive prototypical networks for few-shot relation
 * classification, exposed as a C shared-library API.
 *
 * All functions return pf_status; on anything but PF_OK a description is
 * available from pf_last_error() (thread-local). Strings returned through
 * char** out-parameters are heap-allocated and must be released with
 * pf_string_free().
 */
#ifndef PROTOFORGE_H
#define PROTOFORGE_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PF_API __declspec(dllexport)
#else
#define PF_API __attribute__((visibility("default")))
#endif

typedef enum pf_status {
  PF_OK = 0,
  PF_ERROR = 1,        /* runtime failure (training abort, bad data, io) */
  PF_BAD_CONFIG = 2,   /* usage or configuration error */
  PF_CHECK_FAILED = 3  /* gradcheck ran but exceeded tolerance */
} pf_status;

/* Flat key=value configuration (section-prefixed keys, e.g. encoder.d_h). */
typedef struct pf_config pf_config;

PF_API pf_config* pf_config_new(void);
PF_API void pf_config_free(pf_config* cfg);
PF_API pf_status pf_config_load_file(pf_config* cfg, const char* path);
PF_API pf_status pf_config_set(pf_config* cfg, const char* key, const char* value);
/* NULL when the key is absent; the pointer stays valid until the next call
 * taking this config. */
PF_API const char* pf_config_get(pf_config* cfg, const char* key);
/* Effective configuration (defaults applied), sorted key=value lines. */
PF_API char* pf_config_dump(const pf_config* cfg);

/* Training progress lines are delivered here (and to the log file). */
typedef void (*pf_log_fn)(const char* line, void* user);
PF_API void pf_set_logger(pf_log_fn fn, void* user);

/* Trains per config; writes the best checkpoint to checkpoint_out and the
 * run log (effective config + per-interval lines) to log_path when given. */
PF_API pf_status pf_train(const pf_config* cfg, const char* checkpoint_out,
                          const char* log_path);

/* Evaluates a checkpoint on the configured test split. *report_out receives
 * the machine-readable report followed by an aligned table. */
PF_API pf_status pf_evaluate(const pf_config* cfg, const char* checkpoint_path,
                             char** report_out);

/* Finite-difference gradient check on a fixed toy episode. scope is one of
 * all | encoder | protonet | losses. *table_out receives the per-parameter
 * table even when the check fails (PF_CHECK_FAILED). */
PF_API pf_status pf_grad_check(const pf_config* cfg, const char* scope, char** table_out);

/* Writes synthetic train/val/test datasets, an embedding file and a
 * relation-name table into out_dir. *files_out (optional) receives the
 * newline-separated list of written paths. */
PF_API pf_status pf_make_synthetic(const pf_config* cfg, const char* out_dir,
                                   char** files_out);

/* Samples one episode from the configured split and formats it. */
PF_API pf_status pf_sample_episode(const pf_config* cfg, char** episode_out);

/* Message for the most recent failure on this thread ("" when none). */
PF_API const char* pf_last_error(void);
PF_API void pf_string_free(char* s);
PF_API const char* pf_version(void);

#ifdef __cplusplus
}
#endif

#endif /* PROTOFORGE_H */
