// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "qdsweep/decoding.hpp"
#include "qdsweep/model.hpp"
#include "qdsweep/training.hpp"

using namespace qds;
using namespace qds::model;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

bool params_equal(const LstmLmParams& a, const LstmLmParams& b) {
  bool equal = true;
  visit_blocks(const_cast<LstmLmParams&>(a), [&](const char* name, auto& block) {
    visit_blocks(const_cast<LstmLmParams&>(b), [&](const char* name2, auto& block2) {
      if (std::string(name) == name2 &&
          std::is_same_v<std::decay_t<decltype(block)>, std::decay_t<decltype(block2)>>) {
        if (block.size() != block2.size() ||
            std::memcmp(block.data(), block2.data(), sizeof(double) * block.size()) != 0)
          equal = false;
      }
    });
  });
  return equal;
}

}  // namespace

TEST_CASE("init_params is deterministic per seed") {
  const auto a = init_params({50, 8, 8}, 123, 0.5);
  const auto b = init_params({50, 8, 8}, 123, 0.5);
  CHECK(params_equal(a, b));
  const auto c = init_params({50, 8, 8}, 124, 0.5);
  CHECK(!params_equal(a, c));
}

TEST_CASE("init_params draws match the requested normal law") {
  const auto p = init_params({104, 32, 32}, 9, 1.0);
  std::vector<double> all;
  visit_blocks(const_cast<LstmLmParams&>(p), [&](const char*, auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) all.push_back(block.data()[i]);
  });
  REQUIRE(all.size() > 10000);
  CHECK(std::abs(testutil::mean(all)) < 0.05);
  CHECK(std::abs(testutil::sample_sd(all) - 1.0) < 0.05);
}

TEST_CASE("init_params rejects a degenerate scale") {
  CHECK_THROWS_AS(init_params({10, 4, 4}, 1, 0.0), Error);
  CHECK_THROWS_AS(init_params({10, 0, 4}, 1, 1.0), Error);
  CHECK_THROWS_AS(init_params({4, 4, 4}, 1, 1.0), Error);  // vocab too small
}

TEST_CASE("make_oracle is reproducible and fixed at hidden 32") {
  const auto a = make_oracle(100, 7);
  const auto b = make_oracle(100, 7);
  CHECK(params_equal(a, b));
  CHECK(a.dims.hidden_dim == 32);
  CHECK(a.dims.embed_dim == 32);
  CHECK(a.oracle);
}

TEST_CASE("oracle conditional entropy sits strictly below the uniform bound") {
  const auto oracle = make_oracle(100, 11);
  const double h = training::mean_conditional_entropy(oracle, 100, 20, 20, 3);
  CHECK(h > 0.0);
  CHECK(h < std::log(100.0));
}

TEST_CASE("forward_step on zero parameters yields zero logits") {
  const auto p = testutil::zero_lm(12, 4, 4);
  RnnState st = RnnState::zero(4);
  for (int t = 0; t < 3; ++t) {
    auto [next, logits] = forward_step(p, st, corpus::kBos);
    CHECK(logits.cwiseAbs().maxCoeff() == 0.0);
    st = next;
  }
}

TEST_CASE("forward_step is pure") {
  const auto p = init_params({20, 6, 6}, 5, 0.3);
  const RnnState st = RnnState::zero(6);
  auto [s1, l1] = forward_step(p, st, 7);
  auto [s2, l2] = forward_step(p, st, 7);
  CHECK(l1 == l2);
  CHECK(s1.h == s2.h);
  CHECK(s1.c == s2.c);
}

TEST_CASE("one LSTM step matches pencil-and-paper gate arithmetic") {
  // dims: vocab 5, embed 2, hidden 2. All numbers chosen small and exact.
  LstmLmParams p = testutil::zero_lm(5, 2, 2);
  p.embedding << 0.0, 0.0,   // PAD
      0.1, -0.2,             // BOS
      0.0, 0.3,              // EOS
      -0.4, 0.5,             // UNK
      0.2, 0.1;              // token 4
  p.w_in << 0.1, 0.2, -0.1, 0.3, 0.0, -0.2, 0.4, 0.1;
  p.w_forget << -0.3, 0.1, 0.2, 0.0, 0.5, -0.1, 0.0, 0.2;
  p.w_cell << 0.2, -0.2, 0.1, 0.1, -0.1, 0.3, 0.2, -0.3;
  p.w_out << 0.0, 0.1, -0.2, 0.2, 0.3, 0.0, 0.1, -0.1;
  p.b_in << 0.01, -0.02;
  p.b_forget << 0.03, 0.04;
  p.b_cell << -0.05, 0.06;
  p.b_out << 0.07, -0.08;

  RnnState st;
  st.h.resize(2);
  st.c.resize(2);
  st.h << 0.5, -0.25;
  st.c << 0.1, 0.2;

  auto [next, logits] = forward_step(p, st, 4);

  // Independent recomputation, scalar by scalar.
  const double z0 = 0.2, z1 = 0.1, z2 = 0.5, z3 = -0.25;
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double i0 = sig(0.1 * z0 + 0.2 * z1 + (-0.1) * z2 + 0.3 * z3 + 0.01);
  const double i1 = sig(0.0 * z0 + (-0.2) * z1 + 0.4 * z2 + 0.1 * z3 - 0.02);
  const double f0 = sig(-0.3 * z0 + 0.1 * z1 + 0.2 * z2 + 0.0 * z3 + 0.03);
  const double f1 = sig(0.5 * z0 + (-0.1) * z1 + 0.0 * z2 + 0.2 * z3 + 0.04);
  const double g0 = std::tanh(0.2 * z0 + (-0.2) * z1 + 0.1 * z2 + 0.1 * z3 - 0.05);
  const double g1 = std::tanh(-0.1 * z0 + 0.3 * z1 + 0.2 * z2 + (-0.3) * z3 + 0.06);
  const double o0 = sig(0.0 * z0 + 0.1 * z1 + (-0.2) * z2 + 0.2 * z3 + 0.07);
  const double o1 = sig(0.3 * z0 + 0.0 * z1 + 0.1 * z2 + (-0.1) * z3 - 0.08);
  const double c0 = f0 * 0.1 + i0 * g0;
  const double c1 = f1 * 0.2 + i1 * g1;
  const double h0 = o0 * std::tanh(c0);
  const double h1 = o1 * std::tanh(c1);

  CHECK(next.c(0) == doctest::Approx(c0).epsilon(1e-12));
  CHECK(next.c(1) == doctest::Approx(c1).epsilon(1e-12));
  CHECK(next.h(0) == doctest::Approx(h0).epsilon(1e-12));
  CHECK(next.h(1) == doctest::Approx(h1).epsilon(1e-12));
  // Tied output: logits = embedding * h.
  for (int tok = 0; tok < 5; ++tok)
    CHECK(logits(tok) ==
          doctest::Approx(p.embedding(tok, 0) * h0 + p.embedding(tok, 1) * h1).epsilon(1e-12));
}

TEST_CASE("conditional_dist basics") {
  Eigen::VectorXd flat(3);
  flat << 0.0, 0.0, 0.0;
  const auto u = conditional_dist(flat, 1.0);
  for (int i = 0; i < 3; ++i) CHECK(u(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Eigen::VectorXd two(2);
  two << std::log(2.0), 0.0;
  const auto d = conditional_dist(two, 1.0);
  CHECK(d(0) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(d(1) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Eigen::VectorXd l(3);
  l << 1.0, 0.9, -3.0;
  const auto hard = conditional_dist(l, 0.0);
  CHECK(hard(0) == 1.0);
  CHECK(hard(1) == 0.0);
  CHECK(hard(2) == 0.0);

  Eigen::VectorXd tie(3);
  tie << 2.0, 2.0, 1.0;
  CHECK(conditional_dist(tie, 0.0)(0) == 1.0);  // lowest index wins

  CHECK_THROWS_AS(conditional_dist(l, -0.5), Error);
}

TEST_CASE("conditional_dist properties over random logits") {
  RandomStream rs(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rs.below(30));
    Eigen::VectorXd logits(n);
    for (int i = 0; i < n; ++i) logits(i) = 3.0 * rs.normal();

    // Normalization at several temperatures.
    for (double alpha : {0.1, 0.5, 1.0, 2.0}) {
      const auto p = conditional_dist(logits, alpha);
      CHECK(p.minCoeff() >= 0.0);
      CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    }

    // Entropy strictly increasing in alpha; argmax mass strictly decreasing.
    int argmax = 0;
    for (int i = 1; i < n; ++i)
      if (logits(i) > logits(argmax)) argmax = i;
    double prev_h = -1.0, prev_top = 2.0;
    for (double alpha : {0.1, 0.5, 1.0, 2.0}) {
      const auto p = conditional_dist(logits, alpha);
      const double h = entropy(p);
      CHECK(h > prev_h);
      CHECK(p(argmax) < prev_top);
      prev_h = h;
      prev_top = p(argmax);
    }

    // Scaling identity, exact.
    const double alpha = 0.25 + rs.uniform01();
    const Eigen::VectorXd scaled = logits / alpha;
    const auto a = conditional_dist(logits, alpha);
    const auto b = conditional_dist(scaled, 1.0);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);

    // alpha = 1 equals a plain softmax.
    Eigen::VectorXd plain(n);
    for (int i = 0; i < n; ++i) plain(i) = std::exp(logits(i) - logits.maxCoeff());
    plain /= plain.sum();
    CHECK((conditional_dist(logits, 1.0) - plain).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sequence_nll of the uniform model is exactly log vocab") {
  const auto p = testutil::zero_lm(10, 4, 4);
  corpus::Sentence s;
  s.ids = {4, 5, 6, corpus::kEos};
  CHECK(sequence_nll(p, s, 1.0) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("sequence_nll decomposes into per-step log probabilities") {
  const auto p = init_params({15, 5, 5}, 3, 0.4);
  corpus::Sentence s;
  s.ids = {6, 9, 4, 12, corpus::kEos};

  // Independent recomputation via forward_step + conditional_dist.
  RnnState st = RnnState::zero(5);
  int input = corpus::kBos;
  double total = 0.0;
  for (int id : s.ids) {
    auto [next, logits] = forward_step(p, st, input);
    total -= std::log(conditional_dist(logits, 1.0)(id));
    st = next;
    input = id;
  }
  CHECK(sequence_nll(p, s, 1.0) ==
        doctest::Approx(total / static_cast<double>(s.ids.size())).epsilon(1e-10));
}

TEST_CASE("sequence_nll stays finite at extreme temperatures") {
  const auto p = init_params({15, 5, 5}, 3, 0.6);
  corpus::Sentence s;
  s.ids = {6, 9, 4, corpus::kEos};
  const double nll = sequence_nll(p, s, 0.001);
  CHECK(std::isfinite(nll));
  CHECK_THROWS_AS(sequence_nll(p, s, 0.0), Error);
}

TEST_CASE("a model scores its own greedy sequence at least as well as noise") {
  const auto p = init_params({20, 8, 8}, 17, 0.8);
  const auto greedy = decoding::local_beam(p, 1, 12);
  const double greedy_nll = sequence_nll(p, greedy, 1.0);
  RandomStream rs(5);
  std::vector<double> random_nlls;
  for (int i = 0; i < 50; ++i) {
    const auto s = testutil::random_sentence(20, greedy.content_len(), rs);
    random_nlls.push_back(sequence_nll(p, s, 1.0));
  }
  CHECK(greedy_nll <= testutil::mean(random_nlls));
}

TEST_CASE("discriminate on zero parameters is exactly one half") {
  const auto d = testutil::zero_disc(10, 4, 4);
  corpus::Sentence s;
  s.ids = {4, 7, corpus::kEos};
  CHECK(discriminate(d, s) == 0.5);
  CHECK(discriminate(d, s) == discriminate(d, s));
}

TEST_CASE("model files round trip bit-exactly") {
  const auto p = init_params({30, 6, 9}, 77, 0.5);  // proj path included
  const auto path1 = temp_path("qds_model_a.bin");
  const auto path2 = temp_path("qds_model_b.bin");
  save_params(p, path1);
  const auto q = load_params(path1);
  save_params(q, path2);

  std::ifstream f1(path1, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(b1.size() > 0);

  corpus::Sentence s;
  s.ids = {5, 8, 14, corpus::kEos};
  CHECK(sequence_nll(p, s, 1.0) == sequence_nll(q, s, 1.0));
  std::remove(path1.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("loading a truncated model file fails cleanly") {
  const auto p = init_params({12, 4, 4}, 3, 0.5);
  const auto path = temp_path("qds_model_trunc.bin");
  save_params(p, path);
  // Truncate to half.
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<long>(bytes.size() / 2));
  out.close();
  CHECK_THROWS_AS(load_params(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("discriminator files round trip") {
  const auto d = init_discriminator({25, 5, 7}, 13, 0.3);
  const auto path = temp_path("qds_disc.bin");
  save_discriminator(d, path);
  const auto d2 = load_discriminator(path);
  corpus::Sentence s;
  s.ids = {4, 6, 8, corpus::kEos};
  CHECK(discriminate(d, s) == discriminate(d2, s));
  CHECK_THROWS_AS(load_params(path), Error);  // wrong kind
  std::remove(path.c_str());
}
