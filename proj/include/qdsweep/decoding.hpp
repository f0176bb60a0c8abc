// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qdsweep/model.hpp"
#include "qdsweep/rng.hpp"

namespace qds::decoding {

enum class Strategy { ancestral, greedy, stochastic_beam, gen_rejection, disc_rejection };

const char* strategy_name(Strategy s);

struct DecoderConfig {
  Strategy strategy = Strategy::ancestral;
  double alpha = 1.0;          // temperature (ancestral, beam, gen_rejection)
  int beam_size = 1;           // stochastic beam
  double threshold = -1e9;     // gen_rejection: nats/token log-likelihood floor
  double disc_threshold = 0.5; // disc_rejection: acceptance score in (0,1)
  int max_attempts = 1000;     // rejection strategies
  int max_len = corpus::kDefaultMaxLen;
  int fixed_len = 0;           // >0: exact content length with forced EOS
  std::uint64_t seed = 1;
  const model::DiscriminatorParams* discriminator = nullptr;  // disc_rejection
};

struct SampleBatch {
  std::vector<corpus::Sentence> sentences;
  std::vector<double> loglik;  // per-sentence alpha=1 log-likelihood, nats/token
  long attempts_used = 0;
  double elapsed_seconds = 0.0;

  double mean_loglik() const;
  double acceptance_rate() const;
};

// Termination rules shared by every sampler (decoders and training
// rollouts). `content` is the number of content tokens emitted so far.
inline bool sampling_force_eos(int content, int max_len, int fixed_len) {
  if (fixed_len > 0) return content >= fixed_len;
  return content >= max_len;
}
inline bool sampling_allow_eos(int content, int /*max_len*/, int fixed_len) {
  if (fixed_len > 0) return false;  // EOS is forced exactly at fixed_len
  return content >= 1;
}

/// Extends `tokens` (holding content tokens only) by ancestral sampling,
/// starting from state (h, c) with `logits` the distribution of the next
/// token, until EOS terminates the sentence. The EOS is appended. This is
/// the primitive behind the ancestral decoder and rollout completion.
void ancestral_continue(const model::LstmLmParams& p, Eigen::VectorXd h, Eigen::VectorXd c,
                        Eigen::VectorXd logits, std::vector<int>& tokens, double alpha,
                        int max_len, int fixed_len, RandomStream& rs);

/// One full sentence by ancestral sampling from the start state.
corpus::Sentence sample_one(const model::LstmLmParams& p, double alpha, int max_len,
                            int fixed_len, RandomStream& rs);

/// Draws n sentences under the configured strategy; deterministic per seed
/// (per-sentence streams are derived from (seed, sentence index)).
SampleBatch sample(const model::LstmLmParams& p, const DecoderConfig& cfg, int n);

/// Stochastic beam search: k sampled continuations per live hypothesis
/// (without replacement within one expansion), top-k of the <= k^2
/// candidates by cumulative alpha=1 log-likelihood, and a uniform draw
/// among the completed survivors.
corpus::Sentence stochastic_beam(const model::LstmLmParams& p, int k, double alpha, int max_len,
                                 std::uint64_t seed, int fixed_len = 0);

/// Resample until the per-token alpha=1 log-likelihood reaches tau.
std::pair<corpus::Sentence, long> gen_rejection(const model::LstmLmParams& p, double tau,
                                                double alpha, int max_attempts,
                                                std::uint64_t seed, int max_len,
                                                int fixed_len = 0);

/// Resample until the discriminator score reaches tau_d.
std::pair<corpus::Sentence, long> disc_rejection(const model::LstmLmParams& p,
                                                 const model::DiscriminatorParams& disc,
                                                 double tau_d, int max_attempts,
                                                 std::uint64_t seed, int max_len,
                                                 int fixed_len = 0);

/// Deterministic (locally optimal) beam search, kept out of sweeps; at
/// alpha it reduces to greedy for k = 1.
corpus::Sentence local_beam(const model::LstmLmParams& p, int k, int max_len,
                            int fixed_len = 0);

}  // namespace qds::decoding
