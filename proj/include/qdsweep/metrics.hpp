// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "qdsweep/corpus.hpp"
#include "qdsweep/model.hpp"
#include "qdsweep/training.hpp"

namespace qds::metrics {

inline constexpr int kMaxNgramOrder = 8;

struct MetricConfig {
  double epsilon = 1e-9;   // floor for zero n-gram precisions
  int ref_cap = 5000;      // references above this are subsampled
  std::uint64_t ref_cap_seed = 1;
};

struct MetricReport {
  std::string metric;
  int n = 0;
  double value = 0.0;
  long sample_count = 0;
  long reference_count = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

/// Aggregate n-gram counts (orders 1..n_max) over a reference corpus,
/// content tokens only. Frozen after construction.
class NGramIndex {
 public:
  NGramIndex(const corpus::Corpus& refs, int n_max, const MetricConfig& cfg = {});

  struct Key {
    std::array<std::int32_t, kMaxNgramOrder> ids{};
    std::int32_t len = 0;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = 1469598103934665603ULL;
      for (std::int32_t i = 0; i < k.len; ++i) {
        h ^= static_cast<std::uint64_t>(k.ids[i]) + 0x9e3779b97f4a7c15ULL;
        h *= 1099511628211ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };
  using CountMap = std::unordered_map<Key, long, KeyHash>;

  int n_max() const { return n_max_; }
  long reference_count() const { return n_refs_; }
  const CountMap& counts(int order) const { return counts_[order - 1]; }
  const std::vector<int>& ref_lengths() const { return lengths_; }  // sorted
  long total(int order) const { return totals_[order - 1]; }

  /// Whether sentence `i` of the original corpus made it into the
  /// (possibly capped) reference set.
  bool includes(int i) const;

 private:
  int n_max_;
  long n_refs_ = 0;
  std::vector<CountMap> counts_;
  std::vector<long> totals_;
  std::vector<int> lengths_;
  std::vector<char> included_;
};

/// Mean over hypotheses of sentence-level BLEU against the reference set:
/// geometric mean of clipped modified precisions for orders 1..n, zero
/// precisions floored at epsilon, times the closest-reference-length
/// brevity penalty.
double bleu_n(const corpus::Corpus& hypotheses, const corpus::Corpus& references, int n,
              const MetricConfig& cfg = {});

/// Leave-one-out BLEU of every sentence against the rest of the corpus.
double self_bleu_n(const corpus::Corpus& c, int n, const MetricConfig& cfg = {});

/// Mean sequence NLL of the corpus under an arbitrary scoring model
/// (the oracle for quality, the model itself on held-out data for
/// diversity).
double nll_under_model(const model::LstmLmParams& scorer, const corpus::Corpus& c,
                       double alpha = 1.0);

/// Trains a fresh scoring LM on real data and returns its NLL on the
/// generated corpus. Lower = higher quality.
double lm_score(const corpus::Corpus& real_train, const corpus::Corpus& real_valid,
                const corpus::Corpus& generated, const training::TrainConfig& lm_cfg);

/// Trains a fresh LM on generated data and returns its NLL on real test
/// data. Lower = better coverage.
double reverse_lm_score(const corpus::Corpus& generated_train,
                        const corpus::Corpus& generated_valid, const corpus::Corpus& real_test,
                        const training::TrainConfig& lm_cfg);

/// Convenience overload that carves train/valid out of one generated
/// corpus (9:1, deterministic order).
double reverse_lm_score(const corpus::Corpus& generated, const corpus::Corpus& real_test,
                        const training::TrainConfig& lm_cfg);

/// NLL of test content tokens under add-one-smoothed unigram frequencies
/// of the train corpus (support: the content vocabulary).
double unigram_nll(const corpus::Corpus& train, const corpus::Corpus& test);

/// Architecture used for fresh scoring LMs (lm_score / reverse_lm_score).
model::Dims scorer_dims(int vocab_size);

}  // namespace qds::metrics
