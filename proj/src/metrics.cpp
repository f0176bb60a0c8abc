// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include "qdsweep/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "qdsweep/rng.hpp"

namespace qds::metrics {

namespace {

using corpus::Corpus;
using corpus::Sentence;

NGramIndex::Key make_key(const std::vector<int>& ids, int start, int order) {
  NGramIndex::Key k;
  k.len = order;
  for (int j = 0; j < order; ++j) k.ids[j] = ids[start + j];
  return k;
}

/// Per-sentence n-gram counts for one order; content tokens only.
NGramIndex::CountMap sentence_counts(const Sentence& s, int order) {
  NGramIndex::CountMap m;
  const int len = s.content_len();
  for (int i = 0; i + order <= len; ++i) ++m[make_key(s.ids, i, order)];
  return m;
}

/// Reference length closest to `c`; ties go to the shorter reference.
/// `lengths` is sorted; `skip` removes one occurrence of that value
/// (leave-one-out), pass -1 to disable.
int closest_ref_length(const std::vector<int>& lengths, int c, int skip) {
  int best = -1;
  long best_dist = -1;
  bool skipped = false;
  for (int len : lengths) {
    if (!skipped && len == skip) {
      skipped = true;  // leave-one-out removes one occurrence
      continue;
    }
    const long dist = std::labs(static_cast<long>(len) - c);
    if (best < 0 || dist < best_dist || (dist == best_dist && len < best)) {
      best = len;
      best_dist = dist;
    }
  }
  return best;
}

struct LooAdjustment {
  // Leave-one-out view: counts of the held-out sentence are subtracted
  // from the index on the fly.
  const NGramIndex* index = nullptr;
  std::vector<NGramIndex::CountMap> own;  // per order
  int own_length = 0;
  bool active = false;
};

long ref_count(const NGramIndex& index, const LooAdjustment& loo, int order,
               const NGramIndex::Key& key) {
  long c = 0;
  auto it = index.counts(order).find(key);
  if (it != index.counts(order).end()) c = it->second;
  if (loo.active) {
    auto jt = loo.own[order - 1].find(key);
    if (jt != loo.own[order - 1].end()) c -= jt->second;
  }
  return c;
}

double sentence_bleu(const Sentence& hyp, const NGramIndex& index, int n, double epsilon,
                     const LooAdjustment& loo) {
  const int c = hyp.content_len();
  double log_prec_sum = 0.0;
  for (int order = 1; order <= n; ++order) {
    const auto hyp_counts = sentence_counts(hyp, order);
    long clipped = 0;
    long total = std::max(c - order + 1, 0);
    for (const auto& [key, count] : hyp_counts)
      clipped += std::min(count, std::max(ref_count(index, loo, order, key), 0L));
    const double prec =
        (total > 0 && clipped > 0) ? static_cast<double>(clipped) / static_cast<double>(total)
                                   : epsilon;
    log_prec_sum += std::log(prec);
  }
  const int r = closest_ref_length(index.ref_lengths(), c, loo.active ? loo.own_length : -1);
  if (r < 0) throw Error("bleu: empty reference set");
  const double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(r) / c));
  return bp * std::exp(log_prec_sum / n);
}

void check_order(int n) {
  if (n < 1 || n > kMaxNgramOrder)
    throw Error("bleu: order must be in [1, " + std::to_string(kMaxNgramOrder) + "]");
}

}  // namespace

NGramIndex::NGramIndex(const Corpus& refs, int n_max, const MetricConfig& cfg) : n_max_(n_max) {
  check_order(n_max);
  if (refs.sentences.empty()) throw Error("ngram index: empty reference corpus");
  counts_.resize(n_max);
  totals_.assign(n_max, 0);
  included_.assign(refs.sentences.size(), 1);

  if (cfg.ref_cap > 0 && static_cast<int>(refs.sentences.size()) > cfg.ref_cap) {
    std::vector<int> idx(refs.sentences.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    RandomStream rs(mix_seed(cfg.ref_cap_seed, 0x2E7CA9ULL));
    rs.shuffle(idx);
    std::fill(included_.begin(), included_.end(), 0);
    for (int i = 0; i < cfg.ref_cap; ++i) included_[idx[i]] = 1;
  }

  for (std::size_t i = 0; i < refs.sentences.size(); ++i) {
    if (!included_[i]) continue;
    const Sentence& s = refs.sentences[i];
    ++n_refs_;
    lengths_.push_back(s.content_len());
    for (int order = 1; order <= n_max; ++order) {
      const int len = s.content_len();
      for (int start = 0; start + order <= len; ++start) {
        ++counts_[order - 1][make_key(s.ids, start, order)];
        ++totals_[order - 1];
      }
    }
  }
  std::sort(lengths_.begin(), lengths_.end());
}

bool NGramIndex::includes(int i) const {
  return i >= 0 && i < static_cast<int>(included_.size()) && included_[i];
}

double bleu_n(const Corpus& hypotheses, const Corpus& references, int n,
              const MetricConfig& cfg) {
  check_order(n);
  if (hypotheses.sentences.empty()) throw Error("bleu: empty hypothesis corpus");
  const NGramIndex index(references, n, cfg);
  LooAdjustment no_loo;
  double sum = 0.0;
  for (const Sentence& hyp : hypotheses.sentences)
    sum += sentence_bleu(hyp, index, n, cfg.epsilon, no_loo);
  return sum / static_cast<double>(hypotheses.sentences.size());
}

double self_bleu_n(const Corpus& c, int n, const MetricConfig& cfg) {
  check_order(n);
  if (c.sentences.size() < 2) throw Error("self_bleu: corpus must have at least 2 sentences");
  const NGramIndex index(c, n, cfg);
  double sum = 0.0;
  for (std::size_t i = 0; i < c.sentences.size(); ++i) {
    const Sentence& s = c.sentences[i];
    LooAdjustment loo;
    if (index.includes(static_cast<int>(i))) {
      loo.active = true;
      loo.own_length = s.content_len();
      loo.own.resize(n);
      for (int order = 1; order <= n; ++order) loo.own[order - 1] = sentence_counts(s, order);
      if (index.reference_count() < 2)
        throw Error("self_bleu: leave-one-out leaves no references");
    }
    sum += sentence_bleu(s, index, n, cfg.epsilon, loo);
  }
  return sum / static_cast<double>(c.sentences.size());
}

double nll_under_model(const model::LstmLmParams& scorer, const Corpus& c, double alpha) {
  if (c.sentences.empty()) throw Error("nll_under_model: empty corpus");
  if (c.vocab && c.vocab->size() != scorer.dims.vocab_size)
    throw Error("nll_under_model: vocab size mismatch (corpus " +
                std::to_string(c.vocab->size()) + ", model " +
                std::to_string(scorer.dims.vocab_size) + ")");
  double sum = 0.0;
  for (const Sentence& s : c.sentences) sum += model::sequence_nll(scorer, s, alpha);
  return sum / static_cast<double>(c.sentences.size());
}

model::Dims scorer_dims(int vocab_size) { return {vocab_size, 32, 32}; }

double lm_score(const Corpus& real_train, const Corpus& real_valid, const Corpus& generated,
                const training::TrainConfig& lm_cfg) {
  if (!real_train.vocab) throw Error("lm_score: train corpus has no vocab");
  const auto scorer_init =
      model::init_params(scorer_dims(real_train.vocab->size()), mix_seed(lm_cfg.seed, 0x15C0ULL),
                         0.1);
  auto [scorer, trace] = training::mle_train(scorer_init, real_train, real_valid, lm_cfg);
  return nll_under_model(scorer, generated, 1.0);
}

double reverse_lm_score(const Corpus& generated_train, const Corpus& generated_valid,
                        const Corpus& real_test, const training::TrainConfig& lm_cfg) {
  if (!generated_train.vocab) throw Error("reverse_lm_score: generated corpus has no vocab");
  const auto scorer_init = model::init_params(scorer_dims(generated_train.vocab->size()),
                                              mix_seed(lm_cfg.seed, 0x2E15C0ULL), 0.1);
  auto [scorer, trace] = training::mle_train(scorer_init, generated_train, generated_valid,
                                             lm_cfg);
  return nll_under_model(scorer, real_test, 1.0);
}

double reverse_lm_score(const Corpus& generated, const Corpus& real_test,
                        const training::TrainConfig& lm_cfg) {
  const int n = generated.size();
  if (n < 2 * std::max(1, lm_cfg.batch_size))
    throw Error("reverse_lm_score: generated corpus too small to split");
  const int n_valid = std::max(1, n / 10);
  Corpus train, valid;
  train.vocab = valid.vocab = generated.vocab;
  train.split = corpus::Split::train;
  valid.split = corpus::Split::valid;
  train.sentences.assign(generated.sentences.begin(), generated.sentences.end() - n_valid);
  valid.sentences.assign(generated.sentences.end() - n_valid, generated.sentences.end());
  return reverse_lm_score(train, valid, real_test, lm_cfg);
}

double unigram_nll(const Corpus& train, const Corpus& test) {
  if (!train.vocab || !test.vocab) throw Error("unigram_nll: corpus has no vocab");
  if (train.vocab->size() != test.vocab->size()) throw Error("unigram_nll: vocab mismatch");
  if (train.sentences.empty() || test.sentences.empty())
    throw Error("unigram_nll: empty corpus");

  const int content_vocab = train.vocab->size() - corpus::kNumReserved;
  std::vector<long> counts(train.vocab->size(), 0);
  long total = 0;
  for (const Sentence& s : train.sentences)
    for (int i = 0; i < s.content_len(); ++i) {
      ++counts[s.ids[i]];
      ++total;
    }
  const double denom = static_cast<double>(total) + static_cast<double>(content_vocab);
  double nll = 0.0;
  long n_tokens = 0;
  for (const Sentence& s : test.sentences)
    for (int i = 0; i < s.content_len(); ++i) {
      const double p = (static_cast<double>(counts[s.ids[i]]) + 1.0) / denom;
      nll -= std::log(p);
      ++n_tokens;
    }
  return nll / static_cast<double>(n_tokens);
}

}  // namespace qds::metrics
