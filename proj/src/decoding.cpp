// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include "qdsweep/decoding.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace qds::decoding {

using corpus::Sentence;
using model::LstmLmParams;

namespace {

using Clock = std::chrono::steady_clock;

struct NextDist {
  Eigen::VectorXd h, c;
  Eigen::VectorXd logits;
};

NextDist start_state(const LstmLmParams& p) {
  auto cache = model::detail::lstm_step(p, Eigen::VectorXd::Zero(p.dims.hidden_dim),
                                        Eigen::VectorXd::Zero(p.dims.hidden_dim), corpus::kBos);
  Eigen::VectorXd logits = p.embedding * model::detail::pre_logit(p, cache.h);
  return {std::move(cache.h), std::move(cache.c), std::move(logits)};
}

NextDist advance(const LstmLmParams& p, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                 int token) {
  auto cache = model::detail::lstm_step(p, h, c, token);
  Eigen::VectorXd logits = p.embedding * model::detail::pre_logit(p, cache.h);
  return {std::move(cache.h), std::move(cache.c), std::move(logits)};
}

double per_token_loglik(const LstmLmParams& p, const Sentence& s) {
  return -model::sequence_nll(p, s, 1.0);
}

}  // namespace

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::ancestral: return "ancestral";
    case Strategy::greedy: return "greedy";
    case Strategy::stochastic_beam: return "stochastic_beam";
    case Strategy::gen_rejection: return "gen_rejection";
    case Strategy::disc_rejection: return "disc_rejection";
  }
  return "unknown";
}

double SampleBatch::mean_loglik() const {
  double sum = 0.0;
  for (double v : loglik) sum += v;
  return loglik.empty() ? 0.0 : sum / static_cast<double>(loglik.size());
}

double SampleBatch::acceptance_rate() const {
  if (attempts_used <= 0) return 1.0;
  return static_cast<double>(sentences.size()) / static_cast<double>(attempts_used);
}

void ancestral_continue(const LstmLmParams& p, Eigen::VectorXd h, Eigen::VectorXd c,
                        Eigen::VectorXd logits, std::vector<int>& tokens, double alpha,
                        int max_len, int fixed_len, RandomStream& rs) {
  int content = static_cast<int>(tokens.size());
  for (;;) {
    if (sampling_force_eos(content, max_len, fixed_len)) {
      tokens.push_back(corpus::kEos);
      return;
    }
    Eigen::VectorXd masked = logits;
    model::apply_sample_mask(masked, sampling_allow_eos(content, max_len, fixed_len));
    const Eigen::VectorXd probs = model::conditional_dist(masked, alpha);
    const int tok = rs.categorical({probs.data(), static_cast<std::size_t>(probs.size())});
    tokens.push_back(tok);
    if (tok == corpus::kEos) return;
    ++content;
    NextDist next = advance(p, h, c, tok);
    h = std::move(next.h);
    c = std::move(next.c);
    logits = std::move(next.logits);
  }
}

Sentence sample_one(const LstmLmParams& p, double alpha, int max_len, int fixed_len,
                    RandomStream& rs) {
  if (max_len < 1) throw Error("sample: max_len must be >= 1");
  NextDist start = start_state(p);
  Sentence s;
  ancestral_continue(p, std::move(start.h), std::move(start.c), std::move(start.logits), s.ids,
                     alpha, max_len, fixed_len, rs);
  return s;
}

corpus::Sentence stochastic_beam(const LstmLmParams& p, int k, double alpha, int max_len,
                                 std::uint64_t seed, int fixed_len) {
  if (k < 1) throw Error("stochastic_beam: beam size must be >= 1");
  if (alpha < 0.0) throw Error("stochastic_beam: alpha must be >= 0");
  RandomStream rs(mix_seed(seed, 0xBEA3ULL));

  struct Hyp {
    std::vector<int> tokens;
    double sum_loglik = 0.0;  // cumulative alpha=1 log-likelihood
    Eigen::VectorXd h, c, logits;
    bool completed = false;
  };
  struct Candidate {
    int parent = 0;
    int token = -1;
    double sum_loglik = 0.0;
    bool completed = false;
    bool passthrough = false;
  };

  NextDist start = start_state(p);
  std::vector<Hyp> beam(1);
  beam[0].h = std::move(start.h);
  beam[0].c = std::move(start.c);
  beam[0].logits = std::move(start.logits);

  for (;;) {
    bool all_completed = true;
    for (const Hyp& hyp : beam)
      if (!hyp.completed) all_completed = false;
    if (all_completed) break;

    std::vector<Candidate> candidates;
    for (int hi = 0; hi < static_cast<int>(beam.size()); ++hi) {
      Hyp& hyp = beam[hi];
      if (hyp.completed) {
        candidates.push_back({hi, -1, hyp.sum_loglik, true, true});
        continue;
      }
      const int content = static_cast<int>(hyp.tokens.size());
      const Eigen::VectorXd score_logp = model::log_conditional(hyp.logits, 1.0);
      if (sampling_force_eos(content, max_len, fixed_len)) {
        candidates.push_back(
            {hi, corpus::kEos, hyp.sum_loglik + score_logp(corpus::kEos), true, false});
        continue;
      }
      Eigen::VectorXd masked = hyp.logits;
      model::apply_sample_mask(masked, sampling_allow_eos(content, max_len, fixed_len));
      Eigen::VectorXd probs = model::conditional_dist(masked, alpha);
      // k distinct continuations, sampled without replacement; fewer when
      // the support is smaller.
      for (int draw = 0; draw < k; ++draw) {
        const double mass = probs.sum();
        if (mass <= 0.0) break;
        Eigen::VectorXd renorm = probs / mass;
        const int tok =
            rs.categorical({renorm.data(), static_cast<std::size_t>(renorm.size())});
        probs(tok) = 0.0;
        candidates.push_back(
            {hi, tok, hyp.sum_loglik + score_logp(tok), tok == corpus::kEos, false});
      }
    }
    // Top k by cumulative likelihood, ties broken by generation order.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.sum_loglik > b.sum_loglik;
                     });
    if (static_cast<int>(candidates.size()) > k) candidates.resize(k);

    std::vector<Hyp> next;
    next.reserve(candidates.size());
    for (const Candidate& cand : candidates) {
      const Hyp& parent = beam[cand.parent];
      Hyp hyp;
      hyp.sum_loglik = cand.sum_loglik;
      hyp.completed = cand.completed;
      if (cand.passthrough) {
        hyp.tokens = parent.tokens;
      } else {
        hyp.tokens = parent.tokens;
        hyp.tokens.push_back(cand.token);
        if (!cand.completed) {
          NextDist nd = advance(p, parent.h, parent.c, cand.token);
          hyp.h = std::move(nd.h);
          hyp.c = std::move(nd.c);
          hyp.logits = std::move(nd.logits);
        }
      }
      next.push_back(std::move(hyp));
    }
    beam = std::move(next);
  }

  const std::size_t pick = static_cast<std::size_t>(rs.below(beam.size()));
  Sentence s;
  s.ids = std::move(beam[pick].tokens);
  return s;  // tokens already end with the sampled/forced EOS
}

std::pair<Sentence, long> gen_rejection(const LstmLmParams& p, double tau, double alpha,
                                        int max_attempts, std::uint64_t seed, int max_len,
                                        int fixed_len) {
  if (!std::isfinite(tau)) throw Error("gen_rejection: threshold must be finite");
  if (max_attempts < 1) throw Error("gen_rejection: max_attempts must be >= 1");
  RandomStream rs(mix_seed(seed, 0x63ECULL));
  for (long attempt = 1; attempt <= max_attempts; ++attempt) {
    Sentence s = sample_one(p, alpha, max_len, fixed_len, rs);
    if (per_token_loglik(p, s) >= tau) return {std::move(s), attempt};
  }
  throw RejectionError("gen_rejection: no sample reached threshold " + std::to_string(tau) +
                           " in " + std::to_string(max_attempts) +
                           " attempts (observed acceptance rate 0)",
                       max_attempts, 0.0);
}

std::pair<Sentence, long> disc_rejection(const LstmLmParams& p,
                                         const model::DiscriminatorParams& disc, double tau_d,
                                         int max_attempts, std::uint64_t seed, int max_len,
                                         int fixed_len) {
  if (!(tau_d > 0.0 && tau_d < 1.0)) throw Error("disc_rejection: threshold must be in (0,1)");
  if (max_attempts < 1) throw Error("disc_rejection: max_attempts must be >= 1");
  RandomStream rs(mix_seed(seed, 0xD63ECULL));
  for (long attempt = 1; attempt <= max_attempts; ++attempt) {
    Sentence s = sample_one(p, 1.0, max_len, fixed_len, rs);
    if (model::discriminate(disc, s) >= tau_d) return {std::move(s), attempt};
  }
  throw RejectionError("disc_rejection: no sample reached threshold " + std::to_string(tau_d) +
                           " in " + std::to_string(max_attempts) +
                           " attempts (observed acceptance rate 0)",
                       max_attempts, 0.0);
}

corpus::Sentence local_beam(const LstmLmParams& p, int k, int max_len, int fixed_len) {
  if (k < 1) throw Error("local_beam: beam size must be >= 1");
  struct Hyp {
    std::vector<int> tokens;
    double sum_loglik = 0.0;
    Eigen::VectorXd h, c, logits;
    bool completed = false;
  };
  NextDist start = start_state(p);
  std::vector<Hyp> beam(1);
  beam[0].h = std::move(start.h);
  beam[0].c = std::move(start.c);
  beam[0].logits = std::move(start.logits);

  for (;;) {
    bool all_completed = true;
    for (const Hyp& hyp : beam)
      if (!hyp.completed) all_completed = false;
    if (all_completed) break;

    struct Candidate {
      int parent;
      int token;
      double sum_loglik;
      bool completed;
      bool passthrough;
    };
    std::vector<Candidate> candidates;
    for (int hi = 0; hi < static_cast<int>(beam.size()); ++hi) {
      Hyp& hyp = beam[hi];
      if (hyp.completed) {
        candidates.push_back({hi, -1, hyp.sum_loglik, true, true});
        continue;
      }
      const int content = static_cast<int>(hyp.tokens.size());
      const Eigen::VectorXd logp = model::log_conditional(hyp.logits, 1.0);
      if (sampling_force_eos(content, max_len, fixed_len)) {
        candidates.push_back({hi, corpus::kEos, hyp.sum_loglik + logp(corpus::kEos), true, false});
        continue;
      }
      const bool allow_eos = sampling_allow_eos(content, max_len, fixed_len);
      for (int tok = 0; tok < p.dims.vocab_size; ++tok) {
        if (tok == corpus::kPad || tok == corpus::kBos) continue;
        if (tok == corpus::kEos && !allow_eos) continue;
        candidates.push_back(
            {hi, tok, hyp.sum_loglik + logp(tok), tok == corpus::kEos, false});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.sum_loglik > b.sum_loglik;
                     });
    if (static_cast<int>(candidates.size()) > k) candidates.resize(k);

    std::vector<Hyp> next;
    next.reserve(candidates.size());
    for (const Candidate& cand : candidates) {
      const Hyp& parent = beam[cand.parent];
      Hyp hyp;
      hyp.sum_loglik = cand.sum_loglik;
      hyp.completed = cand.completed;
      hyp.tokens = parent.tokens;
      if (!cand.passthrough) {
        hyp.tokens.push_back(cand.token);
        if (!cand.completed) {
          NextDist nd = advance(p, parent.h, parent.c, cand.token);
          hyp.h = std::move(nd.h);
          hyp.c = std::move(nd.c);
          hyp.logits = std::move(nd.logits);
        }
      }
      next.push_back(std::move(hyp));
    }
    beam = std::move(next);
  }
  // Deterministic variant returns the top survivor.
  std::size_t best = 0;
  for (std::size_t i = 1; i < beam.size(); ++i)
    if (beam[i].sum_loglik > beam[best].sum_loglik) best = i;
  Sentence s;
  s.ids = std::move(beam[best].tokens);
  return s;
}

SampleBatch sample(const LstmLmParams& p, const DecoderConfig& cfg, int n) {
  if (n < 1) throw Error("sample: n must be >= 1");
  if (cfg.max_len < 1) throw Error("sample: max_len must be >= 1");
  if (cfg.beam_size < 1) throw Error("sample: beam_size must be >= 1");
  if (cfg.max_attempts < 1) throw Error("sample: max_attempts must be >= 1");

  SampleBatch batch;
  batch.sentences.reserve(n);
  batch.loglik.reserve(n);
  const auto t0 = Clock::now();
  for (int i = 0; i < n; ++i) {
    const std::uint64_t sentence_seed = mix_seed(cfg.seed, 0x5E2DULL, static_cast<std::uint64_t>(i));
    Sentence s;
    switch (cfg.strategy) {
      case Strategy::ancestral: {
        RandomStream rs(sentence_seed);
        s = sample_one(p, cfg.alpha, cfg.max_len, cfg.fixed_len, rs);
        batch.attempts_used += 1;
        break;
      }
      case Strategy::greedy: {
        RandomStream rs(sentence_seed);
        s = sample_one(p, 0.0, cfg.max_len, cfg.fixed_len, rs);
        batch.attempts_used += 1;
        break;
      }
      case Strategy::stochastic_beam: {
        s = stochastic_beam(p, cfg.beam_size, cfg.alpha, cfg.max_len, sentence_seed,
                            cfg.fixed_len);
        batch.attempts_used += 1;
        break;
      }
      case Strategy::gen_rejection: {
        try {
          auto [sent, attempts] = gen_rejection(p, cfg.threshold, cfg.alpha, cfg.max_attempts,
                                                sentence_seed, cfg.max_len, cfg.fixed_len);
          s = std::move(sent);
          batch.attempts_used += attempts;
        } catch (const RejectionError& e) {
          const long attempts = batch.attempts_used + e.attempts;
          const double rate = attempts > 0 ? static_cast<double>(i) / attempts : 0.0;
          throw RejectionError("sample: sentence " + std::to_string(i) + ": " + e.what() +
                                   " (batch acceptance rate so far " + std::to_string(rate) + ")",
                               attempts, rate);
        }
        break;
      }
      case Strategy::disc_rejection: {
        if (!cfg.discriminator)
          throw Error("sample: disc_rejection requires a discriminator");
        try {
          auto [sent, attempts] =
              disc_rejection(p, *cfg.discriminator, cfg.disc_threshold, cfg.max_attempts,
                             sentence_seed, cfg.max_len, cfg.fixed_len);
          s = std::move(sent);
          batch.attempts_used += attempts;
        } catch (const RejectionError& e) {
          const long attempts = batch.attempts_used + e.attempts;
          const double rate = attempts > 0 ? static_cast<double>(i) / attempts : 0.0;
          throw RejectionError("sample: sentence " + std::to_string(i) + ": " + e.what() +
                                   " (batch acceptance rate so far " + std::to_string(rate) + ")",
                               attempts, rate);
        }
        break;
      }
    }
    batch.loglik.push_back(per_token_loglik(p, s));
    batch.sentences.push_back(std::move(s));
  }
  batch.elapsed_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return batch;
}

}  // namespace qds::decoding
