// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>

#include "qdsweep/corpus.hpp"

namespace qds::model {

struct Dims {
  int vocab_size = 0;
  int embed_dim = 0;
  int hidden_dim = 0;
};

/// Autoregressive LSTM language model. The embedding matrix doubles as the
/// output projection (tied weights): logits are `embedding * o_t` where
/// `o_t` is the pre-logit activation, i.e. the hidden state itself when
/// embed_dim == hidden_dim, otherwise `proj * h + b_proj`.
struct LstmLmParams {
  Dims dims;
  std::uint64_t seed = 0;
  bool oracle = false;  // oracle models are fixed; training refuses them

  Eigen::MatrixXd embedding;                    // vocab x embed
  Eigen::MatrixXd w_in, w_forget, w_cell, w_out;  // hidden x (embed + hidden)
  Eigen::VectorXd b_in, b_forget, b_cell, b_out;  // hidden
  Eigen::MatrixXd proj;    // embed x hidden, only when embed_dim != hidden_dim
  Eigen::VectorXd b_proj;  // embed

  bool has_proj() const { return dims.embed_dim != dims.hidden_dim; }
};

/// Applies `f(name, block)` to every parameter block, in the fixed order
/// used by initialization, serialization and the optimizer.
template <class Params, class F>
void visit_blocks(Params&& p, F&& f) {
  f("embedding", p.embedding);
  f("w_in", p.w_in);
  f("w_forget", p.w_forget);
  f("w_cell", p.w_cell);
  f("w_out", p.w_out);
  f("b_in", p.b_in);
  f("b_forget", p.b_forget);
  f("b_cell", p.b_cell);
  f("b_out", p.b_out);
  if (p.has_proj()) {
    f("proj", p.proj);
    f("b_proj", p.b_proj);
  }
}

struct RnnState {
  Eigen::VectorXd h, c;

  static RnnState zero(int hidden_dim) {
    return {Eigen::VectorXd::Zero(hidden_dim), Eigen::VectorXd::Zero(hidden_dim)};
  }
};

/// Recurrent binary classifier: LSTM encoder plus a sigmoid head on the
/// final hidden state.
struct DiscriminatorParams {
  Dims dims;
  std::uint64_t seed = 0;

  Eigen::MatrixXd embedding;
  Eigen::MatrixXd w_in, w_forget, w_cell, w_out;
  Eigen::VectorXd b_in, b_forget, b_cell, b_out;
  Eigen::VectorXd head_w;  // hidden
  Eigen::VectorXd head_b;  // 1

  bool has_proj() const { return false; }
};

template <class Params, class F>
void visit_disc_blocks(Params&& p, F&& f) {
  f("embedding", p.embedding);
  f("w_in", p.w_in);
  f("w_forget", p.w_forget);
  f("w_cell", p.w_cell);
  f("w_out", p.w_out);
  f("b_in", p.b_in);
  f("b_forget", p.b_forget);
  f("b_cell", p.b_cell);
  f("b_out", p.b_out);
  f("head_w", p.head_w);
  f("head_b", p.head_b);
}

/// All weights i.i.d. Normal(0, scale^2), deterministic per seed.
LstmLmParams init_params(Dims dims, std::uint64_t seed, double scale);

/// Fixed random model treated as the true data distribution of the
/// synthetic task: hidden_dim = embed_dim = 32, standard-normal weights.
LstmLmParams make_oracle(int vocab_size, std::uint64_t seed);

DiscriminatorParams init_discriminator(Dims dims, std::uint64_t seed, double scale);

namespace detail {

/// Per-step forward cache; keeps everything backprop needs.
struct StepCache {
  int token = -1;
  Eigen::VectorXd z;                  // [embedding(token); h_prev]
  Eigen::VectorXd gi, gf, gc, go;     // post-activation gate values
  Eigen::VectorXd c_prev, c, tanh_c, h;
};

StepCache lstm_step(const LstmLmParams& p, const Eigen::VectorXd& h_prev,
                    const Eigen::VectorXd& c_prev, int token);
StepCache lstm_step(const DiscriminatorParams& p, const Eigen::VectorXd& h_prev,
                    const Eigen::VectorXd& c_prev, int token);

/// Pre-logit activation o_t for a hidden state.
Eigen::VectorXd pre_logit(const LstmLmParams& p, const Eigen::VectorXd& h);

}  // namespace detail

/// One LSTM update; returns the new state and the pre-logits
/// `embedding * o_t` (dimension vocab_size). Pure in (params, state, token).
std::pair<RnnState, Eigen::VectorXd> forward_step(const LstmLmParams& p, const RnnState& state,
                                                  int token_id);

/// Boltzmann conditional: softmax(logits / alpha) with max subtraction;
/// alpha = 0 degenerates to a one-hot at the argmax (lowest index wins ties).
Eigen::VectorXd conditional_dist(const Eigen::VectorXd& logits, double alpha);

/// log softmax(logits / alpha); requires alpha > 0. Never overflows for
/// finite logits.
Eigen::VectorXd log_conditional(const Eigen::VectorXd& logits, double alpha);

/// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(const Eigen::VectorXd& probs);

/// Masks ids that sampling never emits: PAD, BOS and UNK always, EOS
/// unless `allow_eos`. Masked logits become -inf; generation draws from
/// content tokens only (UNK stays legal in encoded text).
void apply_sample_mask(Eigen::VectorXd& logits, bool allow_eos);

/// Teacher-forced mean negative log-likelihood in nats per token; the
/// denominator counts the EOS prediction.
double sequence_nll(const LstmLmParams& p, const corpus::Sentence& s, double alpha);

/// Per-step log-probabilities of the sentence tokens (alpha-tempered);
/// sequence_nll is minus their mean.
std::vector<double> step_log_probs(const LstmLmParams& p, const corpus::Sentence& s,
                                   double alpha);

/// Probability in (0,1) that the input is real.
double discriminate(const DiscriminatorParams& d, const corpus::Sentence& s);

void save_params(const LstmLmParams& p, const std::string& path);
LstmLmParams load_params(const std::string& path);
void save_discriminator(const DiscriminatorParams& p, const std::string& path);
DiscriminatorParams load_discriminator(const std::string& path);

}  // namespace qds::model
