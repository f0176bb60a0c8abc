/* SPDX-License-Identifier: Apache-2.0
 * SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors
 *
 * C API of the qdsweep shared library: training, decoding, metrics and
 * quality-diversity sweeps for small autoregressive sequence models.
 *
 * Conventions:
 *   - Opaque handles are created by qds_* constructors and released with
 *     the matching qds_*_free (NULL is always safe to free).
 *   - Functions return QDS_OK on success; on failure qds_last_error()
 *     holds a thread-local message describing what went wrong.
 *   - Config structs must be initialized with their _defaults function
 *     before overriding individual fields.
 *   - `timing_off` selects deterministic CSV artifacts: wall-clock columns
 *     are written as 0.000000 so identical (config, seeds) reproduce
 *     byte-identical files.
 */

#ifndef QDSWEEP_C_API_H
#define QDSWEEP_C_API_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qds_status {
  QDS_OK = 0,
  QDS_ERROR = 1,           /* generic failure, see qds_last_error() */
  QDS_REJECTION_ERROR = 2  /* rejection decoder exhausted max_attempts */
} qds_status;

const char* qds_version(void);
const char* qds_last_error(void);

typedef struct qds_vocab qds_vocab;
typedef struct qds_corpus qds_corpus;
typedef struct qds_model qds_model;
typedef struct qds_disc qds_disc;
typedef struct qds_trace qds_trace;
typedef struct qds_curve qds_curve;

/* ------------------------------------------------------------------ */
/* vocabulary                                                          */
/* ------------------------------------------------------------------ */

qds_status qds_vocab_build_file(const char* text_path, int max_size, qds_vocab** out);
qds_status qds_vocab_synthetic(int total_size, qds_vocab** out);
qds_status qds_vocab_load(const char* path, qds_vocab** out);
qds_status qds_vocab_save(const qds_vocab* v, const char* path);
int qds_vocab_size(const qds_vocab* v);
void qds_vocab_free(qds_vocab* v);

/* ------------------------------------------------------------------ */
/* corpora (one sentence per line, whitespace tokens)                  */
/* ------------------------------------------------------------------ */

qds_status qds_corpus_load(const char* path, const qds_vocab* v, int max_len,
                           qds_corpus** out);
qds_status qds_corpus_save(const qds_corpus* c, const char* path);
int qds_corpus_size(const qds_corpus* c);
qds_status qds_corpus_split(const qds_corpus* c, double f_train, double f_valid,
                            double f_test, uint64_t seed, qds_corpus** train,
                            qds_corpus** valid, qds_corpus** test);
void qds_corpus_free(qds_corpus* c);

/* ------------------------------------------------------------------ */
/* models                                                              */
/* ------------------------------------------------------------------ */

qds_status qds_model_init(int vocab_size, int embed_dim, int hidden_dim, uint64_t seed,
                          double scale, qds_model** out);
qds_status qds_model_oracle(int vocab_size, uint64_t seed, qds_model** out);
qds_status qds_model_load(const char* path, qds_model** out);
qds_status qds_model_save(const qds_model* m, const char* path);
int qds_model_vocab_size(const qds_model* m);
int qds_model_is_oracle(const qds_model* m);
void qds_model_free(qds_model* m);

qds_status qds_disc_init(int vocab_size, int embed_dim, int hidden_dim, uint64_t seed,
                         double scale, qds_disc** out);
qds_status qds_disc_load(const char* path, qds_disc** out);
qds_status qds_disc_save(const qds_disc* d, const char* path);
void qds_disc_free(qds_disc* d);

/* Discriminator score in (0,1) for sentence `index` of the corpus. */
qds_status qds_discriminate(const qds_disc* d, const qds_corpus* c, int index, double* out);

/* ------------------------------------------------------------------ */
/* configuration                                                       */
/* ------------------------------------------------------------------ */

typedef struct qds_train_config {
  double learning_rate;
  int batch_size;
  int max_epochs;
  double grad_clip_norm;
  double adam_beta1;
  double adam_beta2;
  double adam_eps;
  int early_stop_patience;
  double train_temperature;
  uint64_t seed;
} qds_train_config;
void qds_train_config_defaults(qds_train_config* cfg);

typedef struct qds_adv_config {
  int rollout_count;
  int pretrain_epochs;
  int disc_steps_per_gen_step;
  double baseline_learning_rate;
  double entropy_bonus_weight;
  double mle_interleave_ratio;
  int adv_steps;
  uint64_t seed;
  qds_train_config base;
  double disc_learning_rate;
  int eval_every;
  int max_len;
  int fixed_len;
  int step_level_reward; /* 0: one sequence-level reward for all steps */
  int collapse_window;
} qds_adv_config;
void qds_adv_config_defaults(qds_adv_config* cfg);

typedef enum qds_strategy {
  QDS_STRATEGY_ANCESTRAL = 0,
  QDS_STRATEGY_GREEDY = 1,
  QDS_STRATEGY_STOCHASTIC_BEAM = 2,
  QDS_STRATEGY_GEN_REJECTION = 3,
  QDS_STRATEGY_DISC_REJECTION = 4
} qds_strategy;

typedef struct qds_decoder_config {
  qds_strategy strategy;
  double alpha;
  int beam_size;
  double threshold;      /* gen rejection: nats/token log-likelihood floor */
  double disc_threshold; /* disc rejection: score floor in (0,1) */
  int max_attempts;
  int max_len;
  int fixed_len;
  uint64_t seed;
  const qds_disc* discriminator;
} qds_decoder_config;
void qds_decoder_config_defaults(qds_decoder_config* cfg);

typedef struct qds_metric_config {
  double epsilon;
  int ref_cap;
  uint64_t ref_cap_seed;
} qds_metric_config;
void qds_metric_config_defaults(qds_metric_config* cfg);

/* ------------------------------------------------------------------ */
/* training                                                            */
/* ------------------------------------------------------------------ */

typedef struct qds_trace_record {
  long step;
  const char* phase;
  double train_nll;
  double valid_nll;
  double seconds;
} qds_trace_record;

typedef void (*qds_progress_fn)(const qds_trace_record* record, void* user);

/* Trains in place; the model handle holds the best-validation weights. */
qds_status qds_train_mle(qds_model* m, const qds_corpus* train, const qds_corpus* valid,
                         const qds_train_config* cfg, qds_progress_fn progress, void* user,
                         qds_trace** trace_out);

qds_status qds_train_adversarial(qds_model* m, qds_disc* d, const qds_corpus* train,
                                 const qds_corpus* valid, const qds_adv_config* cfg,
                                 qds_progress_fn progress, void* user, qds_trace** trace_out);

qds_status qds_train_discriminator_only(const qds_model* gen, const qds_corpus* real_data,
                                        const qds_adv_config* cfg, qds_disc** out);

qds_status qds_evaluate_nll(const qds_model* m, const qds_corpus* c, double* out);

/* Analytic-vs-finite-difference check over the first n_sentences of the
 * corpus; writes per-block rows when csv_path is non-NULL. */
qds_status qds_gradient_check(const qds_model* m, const qds_corpus* sentences,
                              int n_sentences, double tolerance, double fd_step,
                              const char* csv_path, double* max_rel_err_out, int* pass_out);

long qds_trace_size(const qds_trace* t);
qds_status qds_trace_record_at(const qds_trace* t, long i, qds_trace_record* out);
long qds_trace_phase_switch_step(const qds_trace* t);
long qds_trace_warning_count(const qds_trace* t);
const char* qds_trace_warning(const qds_trace* t, long i);
qds_status qds_trace_write_csv(const qds_trace* t, const char* path, int timing_off);
void qds_trace_free(qds_trace* t);

/* ------------------------------------------------------------------ */
/* decoding                                                            */
/* ------------------------------------------------------------------ */

typedef struct qds_sample_stats {
  long attempts;
  double elapsed_seconds;
  double acceptance_rate;
  double mean_loglik; /* alpha=1 nats/token, averaged over sentences */
} qds_sample_stats;

qds_status qds_sample(const qds_model* m, const qds_vocab* v, const qds_decoder_config* cfg,
                      int n, qds_corpus** out, qds_sample_stats* stats);

/* Deterministic (locally optimal) beam search; excluded from sweeps. */
qds_status qds_sample_local_beam(const qds_model* m, const qds_vocab* v, int beam_size,
                                 int max_len, int fixed_len, qds_corpus** out);

/* ------------------------------------------------------------------ */
/* metrics                                                             */
/* ------------------------------------------------------------------ */

qds_status qds_bleu(const qds_corpus* hyp, const qds_corpus* refs, int n,
                    const qds_metric_config* cfg, double* out);
qds_status qds_self_bleu(const qds_corpus* c, int n, const qds_metric_config* cfg,
                         double* out);
qds_status qds_nll_under_model(const qds_model* scorer, const qds_corpus* c, double alpha,
                               double* out);
qds_status qds_lm_score(const qds_corpus* real_train, const qds_corpus* real_valid,
                        const qds_corpus* generated, const qds_train_config* cfg, double* out);
qds_status qds_reverse_lm_score(const qds_corpus* generated, const qds_corpus* real_test,
                                const qds_train_config* cfg, double* out);
qds_status qds_unigram_nll(const qds_corpus* train, const qds_corpus* test, double* out);

typedef struct qds_metric_report {
  const char* metric;
  int n;
  double value;
  long samples;
  long references;
  double epsilon;
  uint64_t seed;
} qds_metric_report;
qds_status qds_write_eval_csv(const qds_metric_report* rows, int n_rows, const char* path);

/* ------------------------------------------------------------------ */
/* sweeps and orchestration                                            */
/* ------------------------------------------------------------------ */

typedef enum qds_control {
  QDS_CONTROL_TEMPERATURE = 0,
  QDS_CONTROL_BEAM_SIZE = 1,
  QDS_CONTROL_GEN_THRESHOLD = 2,
  QDS_CONTROL_DISC_THRESHOLD = 3
} qds_control;

typedef enum qds_metric_pair {
  QDS_PAIR_BLEU_SBLEU = 0,
  QDS_PAIR_LM_RLM = 1,
  QDS_PAIR_ORACLE_NLL = 2
} qds_metric_pair;

typedef struct qds_sweep_spec {
  qds_control control;
  const double* control_values;
  int n_control_values;
  qds_metric_pair metric_pair;
  int samples_per_point;
  const uint64_t* seeds;
  int n_seeds;
  int bleu_n;
  int max_len;
  int fixed_len;
  int max_attempts;
  qds_metric_config metric_cfg;
  qds_train_config lm_cfg;
  const qds_corpus* references;
  const qds_corpus* real_train;
  const qds_corpus* real_valid;
  const qds_corpus* real_test;
  const qds_model* oracle;
  const qds_disc* discriminator;
  double diversity_ceiling; /* NaN disables the ceiling flag */
  int apply_unigram_floor;
} qds_sweep_spec;
void qds_sweep_spec_defaults(qds_sweep_spec* spec);

typedef struct qds_sweep_point {
  double control;
  double quality;
  double diversity;
  double quality_se;
  double diversity_se;
  double seconds;
  long samples;
  uint64_t seed;
  const char* flag;
} qds_sweep_point;

qds_status qds_run_sweep(const qds_model* m, const qds_sweep_spec* spec,
                         const char* model_id, qds_curve** out);
long qds_curve_size(const qds_curve* c);
qds_status qds_curve_point_at(const qds_curve* c, long i, qds_sweep_point* out);
qds_status qds_curve_write_csv(const qds_curve* c, const char* path, int timing_off);
qds_status qds_curve_load_csv(const char* path, qds_curve** out);
qds_status qds_curve_auc(const qds_curve* c, double diversity_lo, double diversity_hi,
                         double* out);
void qds_curve_free(qds_curve* c);

qds_status qds_bench(const qds_model* m, const qds_decoder_config* strategies,
                     int n_strategies, int n_sentences, const char* csv_path, int timing_off);

qds_status qds_entropy_trace(const qds_model* init, const qds_corpus* train,
                             const qds_corpus* valid, const qds_train_config* mle_cfg,
                             const qds_adv_config* adv_cfg, qds_progress_fn progress,
                             void* user, const char* csv_path, int timing_off);

qds_status qds_train_temp_study(const double* alpha_trains, int n_alphas, int embed_dim,
                                int hidden_dim, const qds_corpus* train,
                                const qds_corpus* valid, const qds_corpus* references,
                                const qds_train_config* base, int bleu_n, int samples,
                                int max_len, int fixed_len, const char* csv_path);

typedef struct qds_synth_config {
  int oracle_vocab;
  uint64_t oracle_seed;
  int seq_len;
  int n_train;
  int n_valid;
  int n_test;
  int student_embed;
  int student_hidden;
  qds_train_config mle;
  qds_adv_config adv;
  const double* alpha_grid;    /* NULL: default grid */
  int n_alpha;
  const double* table1_alphas; /* NULL: {1.0, 0.4, 0.001} */
  int n_table1;
  int table1_samples;
  int samples_per_point;
  const uint64_t* seeds;       /* NULL: {1, 2, 3} */
  int n_seeds;
  int run_adversarial;
} qds_synth_config;
void qds_synth_config_defaults(qds_synth_config* cfg);

qds_status qds_synthetic_experiment(const qds_synth_config* cfg, const char* out_dir,
                                    int timing_off, qds_progress_fn progress, void* user);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QDSWEEP_C_API_H */
