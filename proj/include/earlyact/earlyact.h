/*
 * Copyright (c) 2026 earlyact contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the earlyact library: early action recognition over
 * precomputed segment features, with per-class prototype regularization,
 * an epoch-scheduled temporal loss, and online (streaming) inference.
 *
 * All functions returning ea_status report EA_OK (0) on success. On
 * failure, ea_last_error() returns a thread-local description of the most
 * recent error. Handles are opaque; every *_free accepts NULL.
 */
#ifndef EARLYACT_H
#define EARLYACT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define EA_API __declspec(dllexport)
#else
#define EA_API __attribute__((visibility("default")))
#endif

typedef enum ea_status {
  EA_OK = 0,
  EA_ERR_CONFIG = 1,   /* invalid configuration or argument */
  EA_ERR_SHAPE = 2,    /* dimension mismatch */
  EA_ERR_INDEX = 3,    /* index out of range */
  EA_ERR_CAPACITY = 4, /* sequence longer than the model capacity */
  EA_ERR_NUMERIC = 5,  /* non-finite values encountered */
  EA_ERR_PARSE = 6,    /* malformed file */
  EA_ERR_IO = 7,       /* filesystem failure */
  EA_ERR_UNKNOWN = 8
} ea_status;

typedef enum ea_temporal_loss {
  EA_TEMPORAL_ONLY_LAST = 0,
  EA_TEMPORAL_ALL = 1,
  EA_TEMPORAL_DYNAMIC_HARD = 2,
  EA_TEMPORAL_DYNAMIC_SOFT = 3
} ea_temporal_loss;

typedef enum ea_reg_mode {
  EA_REG_PROTOTYPES = 0,
  EA_REG_PRED_NEXT = 1,
  EA_REG_PRED_FINAL = 2,
  EA_REG_NONE = 3
} ea_reg_mode;

typedef struct ea_dataset ea_dataset;
typedef struct ea_model ea_model;
typedef struct ea_session ea_session;

EA_API const char* ea_version(void);

/* Thread-local message for the last failing call on this thread. */
EA_API const char* ea_last_error(void);

/* ------------------------------------------------------------------ */
/* configuration                                                       */

typedef struct ea_model_config {
  int32_t d_enc;            /* input feature width */
  int32_t d;                /* decoder width */
  int32_t n_blocks;         /* decoder depth */
  int32_t n_heads;
  int32_t t_max;            /* maximum number of segments */
  int32_t k_classes;
  int32_t predictor_hidden; /* hidden width of the feature predictor MLP */
  uint64_t seed;
} ea_model_config;

typedef struct ea_train_config {
  int32_t epochs;
  int32_t e_star;        /* switch epoch of the dynamic loss */
  int32_t batch_size;
  double lr;
  double beta1;
  double beta2;
  double weight_decay;
  double grad_clip;      /* global-norm cap; <= 0 disables */
  uint64_t seed;
  int32_t temporal_mode; /* ea_temporal_loss */
  int32_t reg_mode;      /* ea_reg_mode */
  double alpha;          /* soft-switch smoothness */
  double label_smoothing;
  int32_t eval_every;    /* epochs between validation evals; <= 0 disables */
} ea_train_config;

typedef struct ea_synth_spec {
  int32_t k_classes;      /* must be even: classes form ambiguous pairs */
  int32_t t_segments;
  int32_t d_enc;
  double noise_sigma;
  int32_t ambiguity_depth; /* leading segments shared within each pair */
  int64_t n_train;
  int64_t n_val;
  uint64_t seed;
} ea_synth_spec;

EA_API void ea_model_config_default(ea_model_config* cfg);
EA_API void ea_train_config_default(ea_train_config* cfg);
EA_API void ea_synth_spec_default(ea_synth_spec* spec);

/* ------------------------------------------------------------------ */
/* datasets                                                            */

/* Generates the paired-ambiguity synthetic benchmark. Both outputs must be
 * freed; either out pointer may be NULL to skip that split. */
EA_API ea_status ea_dataset_generate(const ea_synth_spec* spec, ea_dataset** train,
                                     ea_dataset** val);

EA_API ea_status ea_dataset_read(const char* path, ea_dataset** out);
EA_API ea_status ea_dataset_write(const ea_dataset* ds, const char* path);
EA_API void ea_dataset_free(ea_dataset* ds);

EA_API int64_t ea_dataset_size(const ea_dataset* ds);
EA_API int32_t ea_dataset_classes(const ea_dataset* ds);
EA_API int32_t ea_dataset_feature_dim(const ea_dataset* ds);

/* Copies one sample. label/t_len may be NULL. features may be NULL to query
 * the length only; otherwise it receives t_len*d_enc doubles and cap must be
 * at least that. */
EA_API ea_status ea_dataset_sample(const ea_dataset* ds, int64_t index, int32_t* label,
                                   int32_t* t_len, double* features, int64_t cap);

/* ------------------------------------------------------------------ */
/* model                                                               */

EA_API ea_status ea_model_create(const ea_model_config* cfg, ea_model** out);
EA_API void ea_model_free(ea_model* model);
EA_API ea_status ea_model_get_config(const ea_model* model, ea_model_config* out);

EA_API ea_status ea_model_save(const ea_model* model, const char* path);
EA_API ea_status ea_model_load(const char* path, ea_model** out);

/* Trains in place. report_jsonl_path and best_checkpoint_path are optional
 * (NULL or empty to skip). */
EA_API ea_status ea_model_train(ea_model* model, const ea_dataset* train_set,
                                const ea_dataset* val_set, const ea_train_config* cfg,
                                const char* report_jsonl_path, const char* best_checkpoint_path);

/* Accuracy at every observation ratio plus the trapezoidal AUC. rho/top1
 * receive up to cap points; *n_points reports how many exist. */
EA_API ea_status ea_model_eval(const ea_model* model, const ea_dataset* ds, double* rho,
                               double* top1, int32_t cap, int32_t* n_points, double* auc_out);

/* CSV with one row per prototype and one per sample final feature. */
EA_API ea_status ea_model_export_embeddings(const ea_model* model, const ea_dataset* ds,
                                            const char* csv_path);

/* ------------------------------------------------------------------ */
/* streaming inference                                                 */

/* A session owns the per-stream state; the model may be freed while
 * sessions remain alive. store_f32 != 0 keeps cached segment features at
 * 32-bit precision. Sessions are not thread-safe; one per stream. */
EA_API ea_status ea_session_create(const ea_model* model, int32_t store_f32, ea_session** out);
EA_API void ea_session_free(ea_session* session);
EA_API ea_status ea_session_reset(ea_session* session);
EA_API int32_t ea_session_steps(const ea_session* session);

/* Feeds the next segment feature vector (dim must equal d_enc) and writes
 * k_classes probabilities. Fails with EA_ERR_CAPACITY past t_max segments. */
EA_API ea_status ea_session_push(ea_session* session, const double* feature, int32_t dim,
                                 double* probs, int32_t probs_cap);

/* ------------------------------------------------------------------ */
/* metrics                                                             */

/* Trapezoidal area under an accuracy-vs-ratio curve (>= 2 ascending rhos). */
EA_API ea_status ea_auc(const double* rho, const double* top1, int32_t n, double* out);

/* Writes `rho,top1` rows plus the trailing `auc,<value>` row. */
EA_API ea_status ea_metrics_write_csv(const double* rho, const double* top1, int32_t n,
                                      const char* path);

/* Reads a curve CSV (header and trailing auc row optional). Buffers receive
 * up to cap points; *n_points reports how many the file holds. */
EA_API ea_status ea_curve_read_csv(const char* path, double* rho, double* top1, int32_t cap,
                                   int32_t* n_points);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EARLYACT_H */
