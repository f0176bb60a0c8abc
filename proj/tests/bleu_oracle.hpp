// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

// Brute-force BLEU / Self-BLEU reference used for differential testing.
// Deliberately naive: plain std::map counting, reference sets rebuilt from
// scratch for every leave-one-out evaluation, no shared code with the
// library implementation.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace bleu_oracle {

using Tokens = std::vector<int>;  // content tokens only

inline std::map<Tokens, long> count_ngrams(const Tokens& s, int order) {
  std::map<Tokens, long> counts;
  for (std::size_t i = 0; i + order <= s.size(); ++i)
    ++counts[Tokens(s.begin() + i, s.begin() + i + order)];
  return counts;
}

inline double sentence_bleu(const Tokens& hyp, const std::vector<Tokens>& refs, int n,
                            double epsilon) {
  // Aggregate reference counts per order.
  double log_prec_sum = 0.0;
  for (int order = 1; order <= n; ++order) {
    std::map<Tokens, long> ref_counts;
    for (const Tokens& r : refs)
      for (const auto& [gram, cnt] : count_ngrams(r, order)) ref_counts[gram] += cnt;
    const auto hyp_counts = count_ngrams(hyp, order);
    long clipped = 0;
    long total = 0;
    for (const auto& [gram, cnt] : hyp_counts) {
      total += cnt;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(cnt, it->second);
    }
    const double prec =
        (total > 0 && clipped > 0) ? static_cast<double>(clipped) / static_cast<double>(total)
                                   : epsilon;
    log_prec_sum += std::log(prec);
  }
  // Brevity penalty against the closest reference length (shorter on ties).
  const long c = static_cast<long>(hyp.size());
  long r = -1;
  for (const Tokens& ref : refs) {
    const long len = static_cast<long>(ref.size());
    if (r < 0 || std::labs(len - c) < std::labs(r - c) ||
        (std::labs(len - c) == std::labs(r - c) && len < r))
      r = len;
  }
  const double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(r) / c));
  return bp * std::exp(log_prec_sum / n);
}

inline double corpus_bleu(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs,
                          int n, double epsilon) {
  double sum = 0.0;
  for (const Tokens& h : hyps) sum += sentence_bleu(h, refs, n, epsilon);
  return sum / static_cast<double>(hyps.size());
}

inline double self_bleu(const std::vector<Tokens>& corpus, int n, double epsilon) {
  double sum = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::vector<Tokens> rest;
    for (std::size_t j = 0; j < corpus.size(); ++j)
      if (j != i) rest.push_back(corpus[j]);
    sum += sentence_bleu(corpus[i], rest, n, epsilon);
  }
  return sum / static_cast<double>(corpus.size());
}

}  // namespace bleu_oracle
