// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qdsweep/model.hpp"

namespace qds::training {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 50;
  double grad_clip_norm = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int early_stop_patience = 5;
  double train_temperature = 1.0;  // divides logits in the training loss
  std::uint64_t seed = 1;
};

struct AdvConfig {
  int rollout_count = 4;  // Monte-Carlo completions per step reward
  int pretrain_epochs = 10;
  int disc_steps_per_gen_step = 2;
  double baseline_learning_rate = 1e-2;
  double entropy_bonus_weight = 0.0;
  double mle_interleave_ratio = 0.0;  // fraction of generator steps using the MLE loss
  int adv_steps = 200;
  std::uint64_t seed = 1;

  // Optimizer/batching shared with pretraining; the adversarial phase uses
  // base.learning_rate for the generator.
  TrainConfig base;
  double disc_learning_rate = 1e-3;
  int eval_every = 10;  // generator steps between trace records
  int max_len = corpus::kDefaultMaxLen;
  int fixed_len = 0;  // >0: fixed-length sequences (synthetic task)
  bool step_level_reward = true;  // false: one sequence-level reward for all steps
  int collapse_window = 20;  // consecutive perfect-discriminator updates before warning
};

struct TraceRecord {
  long step = 0;
  std::string phase;  // "mle" | "adversarial"
  double train_nll = 0.0;
  double valid_nll = 0.0;
  double seconds = 0.0;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  std::vector<std::string> warnings;
  long phase_switch_step = -1;  // first adversarial step, -1 if single-phase
};

using ProgressFn = std::function<void(const TraceRecord&)>;

/// Gradient accumulator with the same block structure as LstmLmParams.
struct LmGradients {
  model::Dims dims;
  bool with_proj = false;
  Eigen::MatrixXd embedding, w_in, w_forget, w_cell, w_out;
  Eigen::VectorXd b_in, b_forget, b_cell, b_out;
  Eigen::MatrixXd proj;
  Eigen::VectorXd b_proj;

  bool has_proj() const { return with_proj; }
  static LmGradients zero_like(const model::LstmLmParams& p);
};

struct DiscGradients {
  model::Dims dims;
  Eigen::MatrixXd embedding, w_in, w_forget, w_cell, w_out;
  Eigen::VectorXd b_in, b_forget, b_cell, b_out;
  Eigen::VectorXd head_w, head_b;

  bool has_proj() const { return false; }
  static DiscGradients zero_like(const model::DiscriminatorParams& p);
};

/// Analytic gradient of sequence_nll(p, s, alpha) w.r.t. every parameter.
LmGradients nll_gradients(const model::LstmLmParams& p, const corpus::Sentence& s, double alpha,
                          double* nll_out = nullptr);

/// Central-difference gradient of sequence_nll; the independent reference
/// for gradient_check and mutation tests.
LmGradients numeric_gradients(const model::LstmLmParams& p, const corpus::Sentence& s,
                              double alpha, double step);

struct GradCheckBlock {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  double fd_step = 0.0;
  bool pass = false;
};

GradCheckReport gradient_check(const model::LstmLmParams& p, const corpus::Sentence& s,
                               double tolerance, double fd_step = 1e-4);

/// Teacher-forced Adam training with early stopping on validation NLL;
/// returns the best-validation parameters.
std::pair<model::LstmLmParams, TrainTrace> mle_train(const model::LstmLmParams& init,
                                                     const corpus::Corpus& train,
                                                     const corpus::Corpus& valid,
                                                     const TrainConfig& cfg,
                                                     const ProgressFn& progress = {});

/// Mean of per-sentence NLL (alpha = 1) over the corpus.
double evaluate_nll(const model::LstmLmParams& p, const corpus::Corpus& corpus);

struct AdvResult {
  model::LstmLmParams gen;
  model::DiscriminatorParams disc;
  TrainTrace trace;
};

/// MLE pretraining followed by alternating discriminator / REINFORCE
/// generator updates with per-step Monte-Carlo rollout rewards, a learned
/// baseline, optional entropy bonus and optional MLE interleaving.
AdvResult adversarial_train(const model::LstmLmParams& gen_init,
                            const model::DiscriminatorParams& disc_init,
                            const corpus::Corpus& train, const corpus::Corpus& valid,
                            const AdvConfig& cfg, const ProgressFn& progress = {});

/// Trains a discriminator against a frozen generator.
model::DiscriminatorParams train_discriminator_only(const model::LstmLmParams& gen,
                                                    const corpus::Corpus& real,
                                                    const AdvConfig& cfg);

/// Mean over rollout_count completions of the discriminator score of
/// (prefix + sampled completion). `prefix` holds content token ids only.
double rollout_reward(const model::LstmLmParams& gen, const model::DiscriminatorParams& disc,
                      const std::vector<int>& prefix, int rollout_count, std::uint64_t seed,
                      int max_len, int fixed_len);

/// Average entropy of the sampling distribution along free-running samples.
double mean_conditional_entropy(const model::LstmLmParams& p, int n_samples, int max_len,
                                int fixed_len, std::uint64_t seed);

}  // namespace qds::training
