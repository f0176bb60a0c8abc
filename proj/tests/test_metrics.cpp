// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include <algorithm>
#include <cmath>

#include "bleu_oracle.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "qdsweep/decoding.hpp"
#include "qdsweep/metrics.hpp"

using namespace qds;
using namespace qds::metrics;
using corpus::Corpus;
using corpus::Sentence;

namespace {

Corpus make_corpus(std::shared_ptr<const corpus::Vocab> vocab,
                   const std::vector<std::vector<int>>& token_lists) {
  Corpus c;
  c.vocab = std::move(vocab);
  for (const auto& toks : token_lists) {
    Sentence s;
    s.ids = toks;
    s.ids.push_back(corpus::kEos);
    c.sentences.push_back(std::move(s));
  }
  return c;
}

std::vector<bleu_oracle::Tokens> strip_eos(const Corpus& c) {
  std::vector<bleu_oracle::Tokens> out;
  for (const auto& s : c.sentences)
    out.emplace_back(s.ids.begin(), s.ids.end() - 1);
  return out;
}

Corpus sampled_corpus(const model::LstmLmParams& m,
                      std::shared_ptr<const corpus::Vocab> vocab, int n, int len,
                      std::uint64_t seed, double alpha = 1.0) {
  decoding::DecoderConfig cfg;
  cfg.alpha = alpha;
  cfg.max_len = len;
  cfg.fixed_len = len;
  cfg.seed = seed;
  auto batch = decoding::sample(m, cfg, n);
  Corpus c;
  c.vocab = std::move(vocab);
  c.split = corpus::Split::generated;
  c.sentences = std::move(batch.sentences);
  return c;
}

}  // namespace

TEST_CASE("bleu of a corpus against itself as single reference is 1") {
  auto vocab = testutil::synthetic_vocab(10);
  const Corpus c = make_corpus(vocab, {{4, 5, 6, 7, 8}});
  for (int n = 1; n <= 5; ++n) CHECK(bleu_n(c, c, n) == 1.0);
}

TEST_CASE("bleu with zero n-gram overlap collapses to the smoothing floor") {
  auto vocab = testutil::synthetic_vocab(12);
  const Corpus hyp = make_corpus(vocab, {{4, 5, 6}});
  const Corpus refs = make_corpus(vocab, {{7, 8, 9, 10}});
  CHECK(bleu_n(hyp, refs, 3) < 1e-2);
}

TEST_CASE("bleu matches the hand-computed clipped-precision example") {
  // hyp "a b c d" vs refs {"a b c d e", "x y"}: all precisions 1,
  // closest reference length 5 -> BP = exp(1 - 5/4).
  auto vocab = testutil::synthetic_vocab(12);
  const Corpus hyp = make_corpus(vocab, {{4, 5, 6, 7}});
  const Corpus refs = make_corpus(vocab, {{4, 5, 6, 7, 8}, {9, 10}});
  const double expected = std::exp(1.0 - 5.0 / 4.0);
  CHECK(bleu_n(hyp, refs, 2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(bleu_n(hyp, refs, 2) ==
        bleu_oracle::corpus_bleu(strip_eos(hyp), strip_eos(refs), 2, 1e-9));
}

TEST_CASE("self_bleu endpoints") {
  auto vocab = testutil::synthetic_vocab(10);
  std::vector<std::vector<int>> identical(100, {4, 5, 6, 7, 8});
  CHECK(self_bleu_n(make_corpus(vocab, identical), 4) == 1.0);

  const Corpus disjoint = make_corpus(vocab, {{4, 5, 6}, {7, 8, 9}});
  CHECK(self_bleu_n(disjoint, 3) < 1e-2);

  // Not 1.0 as soon as one sentence differs.
  std::vector<std::vector<int>> nearly(20, {4, 5, 6, 7});
  nearly.push_back({4, 5, 6, 8});
  CHECK(self_bleu_n(make_corpus(vocab, nearly), 3) < 1.0);

  CHECK_THROWS_AS(self_bleu_n(make_corpus(vocab, {{4, 5}}), 2), Error);
}

TEST_CASE("bleu and self_bleu match brute force exhaustively") {
  auto vocab = testutil::synthetic_vocab(10);  // content ids 4..9
  RandomStream rs(2024);
  for (int trial = 0; trial < 500; ++trial) {
    auto random_corpus = [&](int min_sentences) {
      std::vector<std::vector<int>> lists;
      const int n_sent = min_sentences + static_cast<int>(rs.below(10 - min_sentences + 1));
      for (int i = 0; i < n_sent; ++i) {
        std::vector<int> toks;
        const int len = 1 + static_cast<int>(rs.below(10));
        for (int k = 0; k < len; ++k)
          toks.push_back(4 + static_cast<int>(rs.below(6)));
        lists.push_back(std::move(toks));
      }
      return make_corpus(vocab, lists);
    };
    const Corpus hyp = random_corpus(1);
    const Corpus refs = random_corpus(1);
    const Corpus both = random_corpus(2);
    const int n = 2 + static_cast<int>(rs.below(4));  // orders 2..5

    const double lib_bleu = bleu_n(hyp, refs, n);
    const double brute_bleu =
        bleu_oracle::corpus_bleu(strip_eos(hyp), strip_eos(refs), n, 1e-9);
    CHECK(lib_bleu == brute_bleu);

    const double lib_self = self_bleu_n(both, n);
    const double brute_self = bleu_oracle::self_bleu(strip_eos(both), n, 1e-9);
    CHECK(lib_self == brute_self);
  }
}

TEST_CASE("bleu and self_bleu are order invariant") {
  auto vocab = testutil::synthetic_vocab(10);
  RandomStream rs(77);
  std::vector<std::vector<int>> lists;
  for (int i = 0; i < 8; ++i) {
    std::vector<int> toks;
    for (int k = 0; k < 5; ++k) toks.push_back(4 + static_cast<int>(rs.below(6)));
    lists.push_back(toks);
  }
  const Corpus refs = make_corpus(vocab, {{4, 5, 6, 7}, {5, 6, 7, 8}});
  const Corpus a = make_corpus(vocab, lists);
  std::reverse(lists.begin(), lists.end());
  const Corpus b = make_corpus(vocab, lists);
  CHECK(std::abs(bleu_n(a, refs, 3) - bleu_n(b, refs, 3)) < 1e-12);
  CHECK(std::abs(self_bleu_n(a, 3) - self_bleu_n(b, 3)) < 1e-12);
}

TEST_CASE("reference capping keeps results deterministic") {
  auto vocab = testutil::synthetic_vocab(10);
  RandomStream rs(5);
  std::vector<std::vector<int>> lists;
  for (int i = 0; i < 50; ++i) {
    std::vector<int> toks;
    for (int k = 0; k < 4; ++k) toks.push_back(4 + static_cast<int>(rs.below(6)));
    lists.push_back(toks);
  }
  const Corpus refs = make_corpus(vocab, lists);
  const Corpus hyp = make_corpus(vocab, {{4, 5, 6, 7}});
  MetricConfig cfg;
  cfg.ref_cap = 20;
  cfg.ref_cap_seed = 9;
  const double a = bleu_n(hyp, refs, 3, cfg);
  const double b = bleu_n(hyp, refs, 3, cfg);
  CHECK(a == b);
  cfg.ref_cap_seed = 10;
  // A different subsample may move the value; it must still be valid.
  const double c = bleu_n(hyp, refs, 3, cfg);
  CHECK(c >= 0.0);
  CHECK(c <= 1.0);
}

TEST_CASE("nll_under_model: uniform scorer and vocab mismatch") {
  auto vocab = testutil::synthetic_vocab(10);
  const Corpus c = make_corpus(vocab, {{4, 5}, {6, 7, 8}});
  const auto uniform = testutil::zero_lm(10, 4, 4);
  CHECK(nll_under_model(uniform, c, 1.0) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  const auto wrong = testutil::zero_lm(12, 4, 4);
  CHECK_THROWS_AS(nll_under_model(wrong, c, 1.0), Error);
}

TEST_CASE("oracle self-scoring is consistent across independent sample sets") {
  const int vocab_size = 30;
  auto vocab = testutil::synthetic_vocab(vocab_size);
  const auto oracle = model::make_oracle(vocab_size, 3);
  const int n = 3000;
  const auto a = sampled_corpus(oracle, vocab, n, 12, 1);
  const auto b = sampled_corpus(oracle, vocab, n, 12, 2);

  std::vector<double> nll_a, nll_b;
  for (const auto& s : a.sentences) nll_a.push_back(model::sequence_nll(oracle, s, 1.0));
  for (const auto& s : b.sentences) nll_b.push_back(model::sequence_nll(oracle, s, 1.0));
  const double se = std::sqrt(testutil::standard_error(nll_a) * testutil::standard_error(nll_a) +
                              testutil::standard_error(nll_b) * testutil::standard_error(nll_b));
  CHECK(std::abs(testutil::mean(nll_a) - testutil::mean(nll_b)) < 2.0 * se);
  CHECK(nll_under_model(oracle, a, 1.0) == doctest::Approx(testutil::mean(nll_a)).epsilon(1e-12));
}

TEST_CASE("unigram_nll: uniform train frequencies give exactly log V") {
  auto vocab = testutil::synthetic_vocab(9);  // 5 content tokens
  std::vector<std::vector<int>> lists;
  for (int rep = 0; rep < 20; ++rep) lists.push_back({4, 5, 6, 7, 8});
  const Corpus train = make_corpus(vocab, lists);
  const Corpus test = make_corpus(vocab, {{4, 6, 8}, {5, 7}});
  CHECK(unigram_nll(train, test) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("unigram_nll matches the hand-computed add-one example") {
  const auto v = std::make_shared<corpus::Vocab>(corpus::build_vocab({"a a a b"}, 10));
  Corpus train;
  train.vocab = v;
  train.sentences.push_back(corpus::encode(*v, "a a a b"));
  Corpus test;
  test.vocab = v;
  test.sentences.push_back(corpus::encode(*v, "a a b"));
  const double expected = -(2.0 * std::log(4.0 / 6.0) + std::log(2.0 / 6.0)) / 3.0;
  CHECK(unigram_nll(train, test) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("a trained LSTM beats the unigram bound on sequential data") {
  const int vocab_size = 30;
  auto vocab = testutil::synthetic_vocab(vocab_size);
  const auto oracle = model::make_oracle(vocab_size, 8);
  const auto train = sampled_corpus(oracle, vocab, 800, 10, 10);
  const auto valid = sampled_corpus(oracle, vocab, 100, 10, 11);
  const auto test = sampled_corpus(oracle, vocab, 200, 10, 12);

  training::TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 15;
  cfg.seed = 4;
  const auto init = model::init_params({vocab_size, 16, 16}, 2, 0.1);
  auto [student, trace] = training::mle_train(init, train, valid, cfg);

  CHECK(unigram_nll(train, test) >= training::evaluate_nll(student, test));
}

TEST_CASE("lm_score is self-consistent on held-out real data") {
  const int vocab_size = 24;
  auto vocab = testutil::synthetic_vocab(vocab_size);
  const auto oracle = model::make_oracle(vocab_size, 15);
  const auto train = sampled_corpus(oracle, vocab, 600, 10, 20);
  const auto valid = sampled_corpus(oracle, vocab, 100, 10, 21);
  const auto slice_a = sampled_corpus(oracle, vocab, 300, 10, 22);
  const auto slice_b = sampled_corpus(oracle, vocab, 300, 10, 23);

  training::TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 10;
  cfg.seed = 7;
  const double score_a = lm_score(train, valid, slice_a, cfg);
  const double score_b = lm_score(train, valid, slice_b, cfg);
  CHECK(std::abs(score_a - score_b) < 0.1);
}

TEST_CASE("lm_score ranks greedy output above tempered samples") {
  const int vocab_size = 24;
  auto vocab = testutil::synthetic_vocab(vocab_size);
  const auto oracle = model::make_oracle(vocab_size, 5);
  const auto train = sampled_corpus(oracle, vocab, 600, 10, 30);
  const auto valid = sampled_corpus(oracle, vocab, 100, 10, 31);

  training::TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 10;
  cfg.seed = 3;
  const auto init = model::init_params({vocab_size, 16, 16}, 6, 0.1);
  auto [student, trace] = training::mle_train(init, train, valid, cfg);

  const auto greedy_corpus = sampled_corpus(student, vocab, 150, 10, 40, 0.0);
  const auto warm_corpus = sampled_corpus(student, vocab, 150, 10, 41, 1.0);
  CHECK(lm_score(train, valid, greedy_corpus, cfg) < lm_score(train, valid, warm_corpus, cfg));
}

TEST_CASE("lm_score of uniform-random text approaches log V") {
  const int vocab_size = 24;
  auto vocab = testutil::synthetic_vocab(vocab_size);
  const auto oracle = model::make_oracle(vocab_size, 25);
  const auto train = sampled_corpus(oracle, vocab, 600, 10, 50);
  const auto valid = sampled_corpus(oracle, vocab, 100, 10, 51);
  const auto noise = sampled_corpus(testutil::zero_lm(vocab_size, 8, 8), vocab, 200, 10, 52);

  training::TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 10;
  cfg.seed = 9;
  const double score = lm_score(train, valid, noise, cfg);
  CHECK(std::abs(score - std::log(vocab_size)) / std::log(vocab_size) < 0.15);
}

TEST_CASE("reverse_lm_score on real data reduces to the ordinary LM score") {
  const int vocab_size = 24;
  auto vocab = testutil::synthetic_vocab(vocab_size);
  const auto oracle = model::make_oracle(vocab_size, 35);
  const auto train = sampled_corpus(oracle, vocab, 500, 10, 60);
  const auto valid = sampled_corpus(oracle, vocab, 80, 10, 61);
  const auto test = sampled_corpus(oracle, vocab, 200, 10, 62);

  training::TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 10;
  cfg.seed = 11;
  const double reverse = reverse_lm_score(train, valid, test, cfg);
  const double forward = lm_score(train, valid, test, cfg);
  CHECK(std::abs(reverse - forward) < 0.1);
}

TEST_CASE("a degenerate generated corpus scores no better than its unigram bound") {
  const int vocab_size = 24;
  auto vocab = testutil::synthetic_vocab(vocab_size);
  const auto oracle = model::make_oracle(vocab_size, 45);
  const auto test = sampled_corpus(oracle, vocab, 200, 10, 70);

  std::vector<std::vector<int>> lists(200, {4, 5, 6, 7, 8, 9, 10, 11, 12, 13});
  const Corpus degenerate = make_corpus(vocab, lists);

  // The scorer must actually memorize the repeated sentence; a half-trained
  // (still smooth) LM would not exhibit the degenerate-coverage penalty.
  training::TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.max_epochs = 60;
  cfg.early_stop_patience = 60;
  cfg.batch_size = 32;
  cfg.seed = 13;
  const double reverse = reverse_lm_score(degenerate, test, cfg);
  CHECK(reverse >= unigram_nll(degenerate, test));
}

TEST_CASE("reverse LM score degrades at collapsed temperatures") {
  const int vocab_size = 24;
  auto vocab = testutil::synthetic_vocab(vocab_size);
  const auto oracle = model::make_oracle(vocab_size, 55);
  const auto train = sampled_corpus(oracle, vocab, 600, 10, 80);
  const auto valid = sampled_corpus(oracle, vocab, 100, 10, 81);
  const auto test = sampled_corpus(oracle, vocab, 200, 10, 82);

  training::TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 10;
  cfg.seed = 17;
  const auto init = model::init_params({vocab_size, 16, 16}, 8, 0.1);
  auto [student, trace] = training::mle_train(init, train, valid, cfg);

  const auto cold = sampled_corpus(student, vocab, 400, 10, 90, 0.3);
  const auto warm = sampled_corpus(student, vocab, 400, 10, 91, 1.0);
  CHECK(reverse_lm_score(cold, test, cfg) > reverse_lm_score(warm, test, cfg));
}
