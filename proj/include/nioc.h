#ifndef NIOC_H
#define NIOC_H

/* C interface to the inverse optimal control library.
 *
 * Conventions:
 *   - Every fallible call returns a nioc_status; NIOC_OK is 0. On failure
 *     nioc_last_error() holds a message for the calling thread until the
 *     next call on that thread.
 *   - Strings handed out through char** are heap allocated; release them
 *     with nioc_string_free. Output pointers are set to NULL on failure.
 *   - Datasets are opaque handles released with nioc_dataset_free.
 *   - JSON parameters documented per function below; unknown keys are
 *     rejected so configuration typos fail loudly.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  NIOC_OK = 0,
  NIOC_ERR_CONFIG = 2, /* bad arguments, unknown names, malformed JSON, file IO */
  NIOC_ERR_SOLVER = 3, /* numerical failure while planning or simulating */
  NIOC_ERR_OPTIM = 4   /* no restart of a fit reached a finite value */
} nioc_status;

typedef struct nioc_dataset nioc_dataset;

const char* nioc_version(void);

/* Message for the last failed call on this thread; "" after success. */
const char* nioc_last_error(void);

void nioc_string_free(char* s);

/* FNV-1a hash of `text` as 16 hex digits. */
nioc_status nioc_config_hash(const char* text, char** out_hex);

/* "# config_hash=...\n# version=...\n" block for CSV provenance. */
nioc_status nioc_provenance_header(const char* config_text, char** out_header);

/* JSON array of registered task ids. */
nioc_status nioc_task_list(char** out_json);

/* JSON array of the task's parameter schema: objects with name, positive,
 * default, range_lo, range_hi, log_range. */
nioc_status nioc_task_schema(const char* task, const char* variant, char** out_json);

/* Solve the task at theta and roll out trajectories.
 * options_json keys (all optional except theta):
 *   theta        {name: value}, validated against the task schema
 *   n_traj       int, default 50
 *   seed         unsigned, default 0
 *   agent        "planner" | "fo_controller"
 *   solver       {max_iterations, tol, line_search_factor,
 *                 line_search_steps, reg_floor, divergence_guard,
 *                 temperature}
 *   task_options {name: value} geometry tweaks, e.g. {"T": 20}
 *   meta         {key: value} strings copied into the dataset header
 */
nioc_status nioc_dataset_generate(const char* task, const char* variant,
                                  const char* options_json, nioc_dataset** out);

nioc_status nioc_dataset_parse(const char* json_text, nioc_dataset** out);

void nioc_dataset_free(nioc_dataset* ds);

nioc_status nioc_dataset_to_json(const nioc_dataset* ds, char** out);

/* traj_id,t,x_0..x_{n-1}; one row per (trajectory, step). */
nioc_status nioc_dataset_to_csv(const nioc_dataset* ds, char** out);

/* Any out pointer may be NULL. */
nioc_status nioc_dataset_dims(const nioc_dataset* ds, int* n_traj, int* horizon,
                              int* state_dim);

nioc_status nioc_dataset_meta_append(nioc_dataset* ds, const char* key, const char* value);

/* Endpoint and cost summary as JSON. Trajectory costs need the stored
 * controls, which never survive serialization, so "cost" is null for
 * reloaded datasets. */
nioc_status nioc_dataset_stats(const nioc_dataset* ds, char** out_json);

/* Log likelihood of the dataset under theta.
 * method is "ours" or "baseline"; variant "full" or "partial".
 * settings_json keys (optional): solver {...}, task_options {...}.
 * Task options recorded in the dataset are applied first; explicit
 * settings override them. A non-finite score is reported as the value,
 * not as an error. */
nioc_status nioc_log_likelihood(const nioc_dataset* ds, const char* method,
                                const char* variant, const char* theta_json,
                                const char* settings_json, double* out);

/* Maximum likelihood fit; returns the result document as JSON.
 * settings_json keys (optional): restarts, seed, jobs, max_iterations,
 * fd_step, gradient_tol, value_tol, solver {...}, init {name: value},
 * task_options {...}, config_hash (16 hex digits echoed into the
 * output). Dataset-recorded task options are applied as for
 * nioc_log_likelihood. */
nioc_status nioc_fit(const nioc_dataset* ds, const char* method, const char* variant,
                     const char* settings_json, char** out_json);

/* Sample parameters, simulate, fit, score. Returns the per-parameter
 * recovery table as CSV and an aggregate summary as JSON.
 * settings_json keys (optional): n_datasets, n_traj, seed, agent,
 * gen_solver {...}, fit {...}, ranges {name: [lo, hi]}, config_hash. */
nioc_status nioc_benchmark(const char* task, const char* variant, const char* method,
                           const char* settings_json, char** out_csv,
                           char** out_summary_json);

#ifdef __cplusplus
}
#endif

#endif /* NIOC_H */
