// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

// Exercises the shared-library surface the way an FFI client would:
// everything through opaque handles and status codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "qdsweep/c_api.h"

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

struct Workspace {
  qds_vocab* vocab = nullptr;
  qds_model* oracle = nullptr;
  qds_corpus* train = nullptr;
  qds_corpus* valid = nullptr;
  qds_corpus* test = nullptr;

  Workspace() {
    REQUIRE(qds_vocab_synthetic(16, &vocab) == QDS_OK);
    REQUIRE(qds_model_oracle(16, 5, &oracle) == QDS_OK);
    qds_decoder_config dec;
    qds_decoder_config_defaults(&dec);
    dec.max_len = 6;
    dec.fixed_len = 6;
    dec.seed = 1;
    REQUIRE(qds_sample(oracle, vocab, &dec, 200, &train, nullptr) == QDS_OK);
    dec.seed = 2;
    REQUIRE(qds_sample(oracle, vocab, &dec, 60, &valid, nullptr) == QDS_OK);
    dec.seed = 3;
    REQUIRE(qds_sample(oracle, vocab, &dec, 60, &test, nullptr) == QDS_OK);
  }
  ~Workspace() {
    qds_corpus_free(test);
    qds_corpus_free(valid);
    qds_corpus_free(train);
    qds_model_free(oracle);
    qds_vocab_free(vocab);
  }
};

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::string(qds_version()) == "1.0.0");
  qds_model* m = nullptr;
  CHECK(qds_model_load("/nonexistent/path.bin", &m) == QDS_ERROR);
  CHECK(std::string(qds_last_error()).find("cannot open") != std::string::npos);
  CHECK(qds_model_init(16, 4, 4, 1, 0.0, &m) == QDS_ERROR);  // degenerate scale
  CHECK(qds_vocab_save(nullptr, "x") == QDS_ERROR);
}

TEST_CASE("vocab and corpus round trips through the C surface") {
  Workspace ws;
  CHECK(qds_vocab_size(ws.vocab) == 16);

  const auto vpath = temp_path("qds_capi_vocab.txt");
  CHECK(qds_vocab_save(ws.vocab, vpath.c_str()) == QDS_OK);
  qds_vocab* v2 = nullptr;
  CHECK(qds_vocab_load(vpath.c_str(), &v2) == QDS_OK);
  CHECK(qds_vocab_size(v2) == 16);

  const auto cpath = temp_path("qds_capi_corpus.txt");
  CHECK(qds_corpus_save(ws.train, cpath.c_str()) == QDS_OK);
  qds_corpus* c2 = nullptr;
  CHECK(qds_corpus_load(cpath.c_str(), v2, 10, &c2) == QDS_OK);
  CHECK(qds_corpus_size(c2) == qds_corpus_size(ws.train));

  qds_corpus *tr = nullptr, *va = nullptr, *te = nullptr;
  CHECK(qds_corpus_split(c2, 0.8, 0.1, 0.1, 7, &tr, &va, &te) == QDS_OK);
  CHECK(qds_corpus_size(tr) == 160);
  CHECK(qds_corpus_size(va) == 20);
  CHECK(qds_corpus_size(te) == 20);
  qds_corpus_free(tr);
  qds_corpus_free(va);
  qds_corpus_free(te);
  qds_corpus_free(c2);
  qds_vocab_free(v2);
  std::remove(vpath.c_str());
  std::remove(cpath.c_str());
}

TEST_CASE("training, evaluation and traces through the C surface") {
  Workspace ws;
  qds_model* student = nullptr;
  REQUIRE(qds_model_init(16, 10, 10, 4, 0.1, &student) == QDS_OK);
  CHECK(qds_model_is_oracle(student) == 0);
  CHECK(qds_model_is_oracle(ws.oracle) == 1);

  double before = 0.0, after = 0.0;
  CHECK(qds_evaluate_nll(student, ws.valid, &before) == QDS_OK);

  qds_train_config cfg;
  qds_train_config_defaults(&cfg);
  cfg.max_epochs = 5;
  cfg.learning_rate = 5e-3;

  static int progress_calls = 0;
  progress_calls = 0;
  qds_trace* trace = nullptr;
  CHECK(qds_train_mle(
            student, ws.train, ws.valid, &cfg,
            [](const qds_trace_record* rec, void*) {
              ++progress_calls;
              CHECK(std::string(rec->phase) == "mle");
            },
            nullptr, &trace) == QDS_OK);
  CHECK(progress_calls > 0);
  CHECK(qds_trace_size(trace) == progress_calls);
  qds_trace_record rec{};
  CHECK(qds_trace_record_at(trace, 0, &rec) == QDS_OK);
  CHECK(rec.step == 1);
  CHECK(qds_trace_record_at(trace, 9999, &rec) == QDS_ERROR);

  CHECK(qds_evaluate_nll(student, ws.valid, &after) == QDS_OK);
  CHECK(after < before);

  const auto tpath = temp_path("qds_capi_trace.csv");
  CHECK(qds_trace_write_csv(trace, tpath.c_str(), 1) == QDS_OK);
  std::ifstream in(tpath);
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,phase,train_nll,valid_nll,seconds");

  // Model file round trip preserves behavior.
  const auto mpath = temp_path("qds_capi_model.bin");
  CHECK(qds_model_save(student, mpath.c_str()) == QDS_OK);
  qds_model* loaded = nullptr;
  CHECK(qds_model_load(mpath.c_str(), &loaded) == QDS_OK);
  double nll_loaded = 0.0;
  CHECK(qds_evaluate_nll(loaded, ws.valid, &nll_loaded) == QDS_OK);
  CHECK(nll_loaded == after);

  qds_model_free(loaded);
  qds_trace_free(trace);
  qds_model_free(student);
  std::remove(tpath.c_str());
  std::remove(mpath.c_str());
}

TEST_CASE("gradient check through the C surface") {
  Workspace ws;
  qds_model* m = nullptr;
  REQUIRE(qds_model_init(16, 5, 6, 9, 0.4, &m) == QDS_OK);
  double max_rel = 1.0;
  int pass = 0;
  CHECK(qds_gradient_check(m, ws.test, 2, 1e-3, 1e-4, nullptr, &max_rel, &pass) == QDS_OK);
  CHECK(pass == 1);
  CHECK(max_rel < 1e-3);
  qds_model_free(m);
}

TEST_CASE("decoding statistics and the rejection status code") {
  Workspace ws;
  qds_decoder_config dec;
  qds_decoder_config_defaults(&dec);
  dec.max_len = 6;
  dec.fixed_len = 6;
  dec.seed = 11;
  qds_corpus* out = nullptr;
  qds_sample_stats stats{};
  CHECK(qds_sample(ws.oracle, ws.vocab, &dec, 50, &out, &stats) == QDS_OK);
  CHECK(qds_corpus_size(out) == 50);
  CHECK(stats.attempts == 50);
  CHECK(stats.acceptance_rate == 1.0);
  CHECK(stats.mean_loglik < 0.0);
  qds_corpus_free(out);

  dec.strategy = QDS_STRATEGY_GEN_REJECTION;
  dec.threshold = 1.0;  // impossible
  dec.max_attempts = 20;
  out = nullptr;
  CHECK(qds_sample(ws.oracle, ws.vocab, &dec, 5, &out, &stats) == QDS_REJECTION_ERROR);
  CHECK(out == nullptr);

  qds_corpus* beam_out = nullptr;
  CHECK(qds_sample_local_beam(ws.oracle, ws.vocab, 2, 6, 6, &beam_out) == QDS_OK);
  CHECK(qds_corpus_size(beam_out) == 1);
  qds_corpus_free(beam_out);
}

TEST_CASE("metrics through the C surface") {
  Workspace ws;
  qds_metric_config mc;
  qds_metric_config_defaults(&mc);
  double bleu = 0.0, sbleu = 0.0, nll = 0.0, unigram = 0.0;
  CHECK(qds_bleu(ws.test, ws.train, 3, &mc, &bleu) == QDS_OK);
  CHECK(bleu > 0.0);
  CHECK(bleu <= 1.0);
  CHECK(qds_self_bleu(ws.test, 3, &mc, &sbleu) == QDS_OK);
  CHECK(qds_nll_under_model(ws.oracle, ws.test, 1.0, &nll) == QDS_OK);
  CHECK(nll > 0.0);
  CHECK(qds_unigram_nll(ws.train, ws.test, &unigram) == QDS_OK);
  CHECK(unigram > 0.0);

  qds_metric_report rows[2] = {
      {"bleu", 3, bleu, qds_corpus_size(ws.test), qds_corpus_size(ws.train), mc.epsilon, 0},
      {"self_bleu", 3, sbleu, qds_corpus_size(ws.test), qds_corpus_size(ws.test), mc.epsilon,
       0}};
  const auto path = temp_path("qds_capi_eval.csv");
  CHECK(qds_write_eval_csv(rows, 2, path.c_str()) == QDS_OK);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "metric,n,value,samples,references,epsilon,seed");
  std::remove(path.c_str());
}

TEST_CASE("discriminator workflow through the C surface") {
  Workspace ws;
  qds_adv_config cfg;
  qds_adv_config_defaults(&cfg);
  cfg.adv_steps = 10;
  cfg.base.batch_size = 8;
  cfg.max_len = 6;
  cfg.fixed_len = 6;
  qds_disc* disc = nullptr;
  CHECK(qds_train_discriminator_only(ws.oracle, ws.train, &cfg, &disc) == QDS_OK);
  double score = 0.0;
  CHECK(qds_discriminate(disc, ws.test, 0, &score) == QDS_OK);
  CHECK(score > 0.0);
  CHECK(score < 1.0);
  CHECK(qds_discriminate(disc, ws.test, 10000, &score) == QDS_ERROR);

  const auto path = temp_path("qds_capi_disc.bin");
  CHECK(qds_disc_save(disc, path.c_str()) == QDS_OK);
  qds_disc* loaded = nullptr;
  CHECK(qds_disc_load(path.c_str(), &loaded) == QDS_OK);
  double score2 = 0.0;
  CHECK(qds_discriminate(loaded, ws.test, 0, &score2) == QDS_OK);
  CHECK(score2 == score);
  qds_disc_free(loaded);
  qds_disc_free(disc);
  std::remove(path.c_str());
}

TEST_CASE("sweep, curve accessors and auc through the C surface") {
  Workspace ws;
  qds_sweep_spec spec;
  qds_sweep_spec_defaults(&spec);
  const double controls[2] = {1.0, 0.5};
  const uint64_t seeds[1] = {4};
  spec.control_values = controls;
  spec.n_control_values = 2;
  spec.metric_pair = QDS_PAIR_ORACLE_NLL;
  spec.samples_per_point = 100;
  spec.seeds = seeds;
  spec.n_seeds = 1;
  spec.max_len = 6;
  spec.fixed_len = 6;
  spec.oracle = ws.oracle;
  spec.real_test = ws.test;

  qds_curve* curve = nullptr;
  REQUIRE(qds_run_sweep(ws.oracle, &spec, "oracle", &curve) == QDS_OK);
  CHECK(qds_curve_size(curve) == 2);
  qds_sweep_point point{};
  CHECK(qds_curve_point_at(curve, 0, &point) == QDS_OK);
  CHECK(point.control == 1.0);
  CHECK(std::string(point.flag) == "ok");
  CHECK(point.samples == 100);

  const auto path = temp_path("qds_capi_curve.csv");
  CHECK(qds_curve_write_csv(curve, path.c_str(), 1) == QDS_OK);
  qds_curve* loaded = nullptr;
  CHECK(qds_curve_load_csv(path.c_str(), &loaded) == QDS_OK);
  CHECK(qds_curve_size(loaded) == 2);

  qds_sweep_point p0{}, p1{};
  qds_curve_point_at(curve, 0, &p0);
  qds_curve_point_at(curve, 1, &p1);
  const double lo = std::min(p0.diversity, p1.diversity);
  const double hi = std::max(p0.diversity, p1.diversity);
  if (hi > lo) {
    double area1 = 0.0, area2 = 0.0;
    CHECK(qds_curve_auc(curve, lo, hi, &area1) == QDS_OK);
    CHECK(qds_curve_auc(loaded, lo, hi, &area2) == QDS_OK);
    CHECK(area1 == doctest::Approx(area2).epsilon(1e-9));
  }
  qds_curve_free(loaded);
  qds_curve_free(curve);
  std::remove(path.c_str());
}

TEST_CASE("bench artifact through the C surface") {
  Workspace ws;
  qds_decoder_config cfgs[2];
  qds_decoder_config_defaults(&cfgs[0]);
  cfgs[0].max_len = 6;
  cfgs[0].fixed_len = 6;
  qds_decoder_config_defaults(&cfgs[1]);
  cfgs[1].strategy = QDS_STRATEGY_GREEDY;
  cfgs[1].max_len = 6;
  cfgs[1].fixed_len = 6;
  const auto path = temp_path("qds_capi_bench.csv");
  CHECK(qds_bench(ws.oracle, cfgs, 2, 150, path.c_str(), 1) == QDS_OK);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "strategy,control,n,seconds,tokens,acceptance_rate");
  std::remove(path.c_str());
}
