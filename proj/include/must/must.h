/* C API for the MUST compositional zero-shot learning library.
 *
 * All functions return MUST_OK on success, MUST_ERR_RUNTIME on runtime or
 * numerical failures, and MUST_ERR_CONFIG on configuration or file-format
 * problems; must_last_error() describes the most recent failure on the
 * calling thread. Handles are opaque and must be released with their
 * matching free function.
 */
#ifndef MUST_MUST_H
#define MUST_MUST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MUST_API __declspec(dllexport)
#else
#define MUST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define MUST_OK 0
#define MUST_ERR_RUNTIME 1
#define MUST_ERR_CONFIG 2

MUST_API const char* must_version(void);

/* Message for the last failing call on this thread; empty string if none. */
MUST_API const char* must_last_error(void);

/* ---- commands ------------------------------------------------------- */

/* Generates a synthetic dataset bundle into out_dir. config_path may be
 * NULL; overrides is an optional "key = value" per line block applied on
 * top of the config file (CLI flags arrive here). */
MUST_API int must_cmd_synth(const char* config_path, const char* overrides, const char* out_dir);

/* Trains on the bundle in data_dir and writes checkpoint.must, history.csv
 * and resolved_config.txt into out_dir. */
MUST_API int must_cmd_train(const char* data_dir, const char* config_path, const char* overrides,
                            const char* out_dir);

/* Evaluates a checkpoint on the bundle's test split. inference is one of
 * must|base|max|equal|fixed|all; alpha/beta may be NULL unless inference is
 * "fixed". curve_csv may be NULL to skip the curve file. */
MUST_API int must_cmd_eval(const char* data_dir, const char* ckpt_path, const char* inference,
                           const double* alpha, const double* beta, int topk,
                           const char* report_path, const char* curve_csv);

/* Runs the finite-difference check of the full training objective in both
 * weight modes. *report_out (if non-NULL) receives a malloc'd table; free it
 * with must_string_free. Returns MUST_OK only if every parameter passes. */
MUST_API int must_cmd_gradcheck(uint64_t seed, double tol, char** report_out);

MUST_API void must_string_free(char* s);

/* ---- dataset bundles ------------------------------------------------- */

typedef struct must_bundle must_bundle;

MUST_API int must_bundle_load(const char* dir, must_bundle** out);
MUST_API void must_bundle_free(must_bundle* b);

MUST_API int must_bundle_counts(const must_bundle* b, uint32_t* n_states, uint32_t* n_objects,
                                uint32_t* n_pairs, uint64_t* n_samples);
MUST_API int must_bundle_feat_dim(const must_bundle* b, uint32_t* feat_dim);

/* ---- models ----------------------------------------------------------- */

typedef struct must_model must_model;

MUST_API int must_model_load(const char* ckpt_path, must_model** out);
MUST_API void must_model_free(must_model* m);

MUST_API int must_model_dims(const must_model* m, uint32_t* feat_dim, uint32_t* embed_dim,
                             uint32_t* n_pairs);

/* Blended pair scores for a row-major batch of features [n x feat_dim].
 * out_scores must hold n * n_pairs doubles. alpha/beta as in must_cmd_eval.
 */
MUST_API int must_model_score(const must_model* m, const double* features, size_t n,
                              size_t feat_dim, const char* inference, const double* alpha,
                              const double* beta, double* out_scores);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MUST_MUST_H */
