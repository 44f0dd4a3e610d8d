/* SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the table question-answering engine: synthetic dataset
 * generation, training, evaluation/ensembling, discrete program execution
 * and operation statistics. Handles are opaque; every fallible call
 * returns a status code (also used as the CLI exit code) and leaves a
 * message in tqp_last_error() on failure. Strings returned through
 * char** are heap-allocated; release them with tqp_string_free().
 */
#ifndef TABLEPROG_H
#define TABLEPROG_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  TQP_OK = 0,
  TQP_EINVAL = 1,  /* validation error (bad config, bad arguments) */
  TQP_ERUNTIME = 2 /* runtime failure (I/O, divergence, internal) */
};

const char* tqp_version(void);

/* thread-local message describing the last failure in this thread */
const char* tqp_last_error(void);

void tqp_string_free(char* s);

/* ---- run configuration (flat key=value file) ---- */
typedef struct tqp_config tqp_config;

tqp_config* tqp_config_new(void);
tqp_config* tqp_config_load(const char* path);
int tqp_config_set(tqp_config* cfg, const char* key, const char* value);
/* *value_out receives a heap string */
int tqp_config_get(const tqp_config* cfg, const char* key, char** value_out);
int tqp_config_save(const tqp_config* cfg, const char* path);
void tqp_config_free(tqp_config* cfg);

/* ---- synthetic dataset generation ---- */
int tqp_gen_dataset(uint64_t seed, int64_t n_examples, const char* out_dir,
                    char** report_out);

/* ---- training ---- */
typedef void (*tqp_log_fn)(const char* line, void* user);

/* Runs a full training loop from the config (dataset, seed, checkpoints,
 * metrics log). log may be NULL. */
int tqp_train(const tqp_config* cfg, tqp_log_fn log, void* user,
              char** report_out);

/* ---- models and datasets ---- */
typedef struct tqp_model tqp_model;
tqp_model* tqp_model_load(const char* checkpoint_path);
void tqp_model_free(tqp_model* m);

typedef struct tqp_dataset tqp_dataset;
tqp_dataset* tqp_dataset_load(const char* manifest_path);
void tqp_dataset_free(tqp_dataset* d);

/* ---- evaluation ---- */
enum { TQP_EVAL_ORACLE = 1 };

/* Hard evaluation of an ensemble (selector distributions averaged across
 * models at every timestep). records_path, accuracy_out, oracle_out and
 * report_out may be NULL. */
int tqp_evaluate(tqp_model* const* models, size_t n_models,
                 const tqp_dataset* data, const char* split, int flags,
                 const char* records_path, double* accuracy_out,
                 double* oracle_out, char** report_out);

/* ---- discrete program execution ---- */
/* program_text: steps "op[:column]" separated by '/' or newlines.
 * question may be NULL; when given, its table matches drive select and its
 * first number token sets the pivots. pivot (optional) overrides all four
 * pivots. timesteps > 0 enforces the program length. */
int tqp_run_program(const char* table_path, const char* program_text,
                    const char* question, const double* pivot,
                    int64_t timesteps, char** output_out);

/* ---- operation statistics over an evaluation records file ---- */
int tqp_stats(const char* records_path, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* TABLEPROG_H */
