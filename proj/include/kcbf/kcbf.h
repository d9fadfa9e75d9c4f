#ifndef KCBF_KCBF_H
#define KCBF_KCBF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KCBF_API __declspec(dllexport)
#else
#define KCBF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kcbf_status {
  KCBF_OK = 0,
  KCBF_INVALID_ARGUMENT = 1,
  KCBF_SINGULAR_GRAM = 2,
  KCBF_INFEASIBLE = 3,
  KCBF_MAX_ITERATIONS = 4,
  KCBF_NO_CONVERGENCE = 5,
  KCBF_DEGENERATE_DATA = 6,
  KCBF_INDEX_OUT_OF_STATE_BLOCK = 7,
  KCBF_NONPOSITIVE_WEIGHTS = 8,
  KCBF_EMPTY_CALIBRATION_SET = 9,
  KCBF_NON_FINITE_STATE = 10,
  KCBF_UNKNOWN_KIND = 11,
  KCBF_NON_FINITE_LOSS = 12,
  KCBF_EMPTY_LOG = 13,
  KCBF_IO = 14,
  KCBF_PARSE = 15,
  KCBF_SCHEMA_MISMATCH = 16,
  KCBF_ACTION_ECHO_MISMATCH = 17,
  KCBF_INTERNAL = 99
} kcbf_status;

typedef enum kcbf_certificate {
  KCBF_CERT_ENFORCED = 0,
  KCBF_CERT_SLACK_ACTIVE = 1,
  KCBF_CERT_TRIVIALLY_SATISFIED = 2,
  KCBF_CERT_DEGENERATE_ROW = 3,
  KCBF_CERT_INFINITE_RHO = 4
} kcbf_certificate;

typedef struct kcbf_config kcbf_config;
typedef struct kcbf_safety kcbf_safety;

/* Library version, e.g. "1.0.0". */
KCBF_API const char* kcbf_version(void);

/* Message of the last failed call on this thread; "" after a success. */
KCBF_API const char* kcbf_last_error(void);

/* Symbolic name of a status, e.g. "Infeasible". */
KCBF_API const char* kcbf_status_name(kcbf_status status);

/* Frees strings returned through char** out-parameters. */
KCBF_API void kcbf_string_free(char* s);

/* Run configuration. */
KCBF_API kcbf_status kcbf_config_default(const char* env, kcbf_config** out);
KCBF_API kcbf_status kcbf_config_load(const char* path, kcbf_config** out);
KCBF_API kcbf_status kcbf_config_from_json(const char* json, kcbf_config** out);
/* Overrides the fields present in a JSON object; on failure cfg is unchanged. */
KCBF_API kcbf_status kcbf_config_update(kcbf_config* cfg, const char* json_patch);
KCBF_API kcbf_status kcbf_config_to_json(const kcbf_config* cfg, char** out);
KCBF_API kcbf_status kcbf_config_run_id(const kcbf_config* cfg, char** out);
KCBF_API void kcbf_config_free(kcbf_config* cfg);

/* Pipeline stages. Each writes under <out_root>/<run-id>/ and, when run_dir
   is non-null, returns that directory. */
KCBF_API kcbf_status kcbf_collect(const kcbf_config* cfg, const char* out_root, char** run_dir);
KCBF_API kcbf_status kcbf_fit(const kcbf_config* cfg, const char* out_root, char** run_dir);
KCBF_API kcbf_status kcbf_calibrate(const kcbf_config* cfg, const char* out_root, char** run_dir);
/* Full run; summary receives summary.json (null when the budget is 0). */
KCBF_API kcbf_status kcbf_train(const kcbf_config* cfg, const char* out_root, char** run_dir,
                                char** summary);
/* Evaluates one seed; summary receives the evaluation metrics as JSON. */
KCBF_API kcbf_status kcbf_eval(const kcbf_config* cfg, const char* out_root, uint64_t seed,
                               int episodes, char** summary);
/* η sweep on the synthetic plant; writes <out_root>/ablation.csv. */
KCBF_API kcbf_status kcbf_ablate(const kcbf_config* cfg, const double* etas, size_t num_etas,
                                 const char* out_root, char** result);
/* ρ-versus-violation report over summary.json files; writes out_csv when non-null. */
KCBF_API kcbf_status kcbf_report(const char* const* summary_paths, size_t num_paths,
                                 const char* out_csv, char** result);

/* Calibrated safety filter loaded from a run directory holding config.json,
   model.json and calibration.json. */
KCBF_API kcbf_status kcbf_safety_load(const char* run_dir, kcbf_safety** out);
KCBF_API kcbf_status kcbf_safety_dims(const kcbf_safety* s, size_t* model_state_dim,
                                      size_t* lifted_dim, size_t* action_dim,
                                      size_t* num_barriers);
/* z = ψ(y); z has lifted_dim entries. */
KCBF_API kcbf_status kcbf_safety_lift(const kcbf_safety* s, const double* y, double* z);
/* Barrier values at y; h has num_barriers entries. */
KCBF_API kcbf_status kcbf_safety_barriers(const kcbf_safety* s, const double* y, double* h);
/* Filters u_nom at modeling state y. xi (num_barriers entries) and
   certificate may be null. */
KCBF_API kcbf_status kcbf_safety_filter(const kcbf_safety* s, const double* y,
                                        const double* u_nom, double* u_safe, double* xi,
                                        kcbf_certificate* certificate);
KCBF_API void kcbf_safety_free(kcbf_safety* s);

#ifdef __cplusplus
}
#endif

#endif
