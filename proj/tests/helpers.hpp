// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "qdsweep/corpus.hpp"
#include "qdsweep/model.hpp"
#include "qdsweep/rng.hpp"

namespace testutil {

inline double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double sample_sd(const std::vector<double>& xs) {
  const double m = mean(xs);
  double var = 0.0;
  for (double x : xs) var += (x - m) * (x - m);
  return std::sqrt(var / static_cast<double>(xs.size() - 1));
}

inline double standard_error(const std::vector<double>& xs) {
  return sample_sd(xs) / std::sqrt(static_cast<double>(xs.size()));
}

inline std::shared_ptr<const qds::corpus::Vocab> synthetic_vocab(int total_size) {
  return std::make_shared<qds::corpus::Vocab>(qds::corpus::Vocab::synthetic(total_size));
}

inline qds::corpus::Corpus corpus_from_lines(std::shared_ptr<const qds::corpus::Vocab> vocab,
                                             const std::vector<std::string>& lines,
                                             int max_len = qds::corpus::kDefaultMaxLen) {
  qds::corpus::Corpus c;
  c.vocab = vocab;
  for (const auto& line : lines) c.sentences.push_back(qds::corpus::encode(*vocab, line, max_len));
  return c;
}

/// All-zero parameters: uniform conditionals at every step.
inline qds::model::LstmLmParams zero_lm(int vocab, int embed, int hidden) {
  auto p = qds::model::init_params({vocab, embed, hidden}, 1, 1.0);
  qds::model::visit_blocks(p, [](const char*, auto& b) { b.setZero(); });
  return p;
}

inline qds::model::DiscriminatorParams zero_disc(int vocab, int embed, int hidden) {
  auto d = qds::model::init_discriminator({vocab, embed, hidden}, 1, 1.0);
  qds::model::visit_disc_blocks(d, [](const char*, auto& b) { b.setZero(); });
  return d;
}

/// 1-dimensional model whose first-step conditional puts 2/3 on token 4
/// ("a") and 1/3 on token 5 ("b"), with negligible mass elsewhere. All gate
/// weights are zero except the cell bias, so the hidden state after the
/// first step is h1 = 0.5 * tanh(0.5 * tanh(3)) regardless of input.
inline qds::model::LstmLmParams two_token_model() {
  auto p = zero_lm(6, 1, 1);
  p.b_cell(0) = 3.0;
  const double h1 = 0.5 * std::tanh(0.5 * std::tanh(3.0));
  p.embedding.setZero();
  p.embedding(4, 0) = std::log(2.0) / h1;  // logit ln 2
  p.embedding(5, 0) = 0.0;                 // logit 0
  p.embedding(qds::corpus::kUnk, 0) = -200.0 / h1;  // effectively impossible
  p.embedding(qds::corpus::kEos, 0) = -200.0 / h1;
  return p;
}

/// Random sentence of in-range content tokens (for NLL comparisons).
inline qds::corpus::Sentence random_sentence(int vocab, int len, qds::RandomStream& rs) {
  qds::corpus::Sentence s;
  for (int i = 0; i < len; ++i)
    s.ids.push_back(qds::corpus::kNumReserved +
                    static_cast<int>(rs.below(vocab - qds::corpus::kNumReserved)));
  s.ids.push_back(qds::corpus::kEos);
  return s;
}

}  // namespace testutil
