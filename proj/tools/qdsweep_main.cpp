// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

// Command-line front end. Talks to the core exclusively through the C API
// in qdsweep/c_api.h; every subcommand accepts a flat key=value config file
// via --config with flags overriding file entries.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qdsweep/c_api.h"

namespace {

[[noreturn]] void die(const std::string& what) {
  std::fprintf(stderr, "error: %s\n", what.c_str());
  std::exit(1);
}

void check(qds_status status) {
  if (status != QDS_OK) die(qds_last_error());
}

using VocabPtr = std::unique_ptr<qds_vocab, void (*)(qds_vocab*)>;
using CorpusPtr = std::unique_ptr<qds_corpus, void (*)(qds_corpus*)>;
using ModelPtr = std::unique_ptr<qds_model, void (*)(qds_model*)>;
using DiscPtr = std::unique_ptr<qds_disc, void (*)(qds_disc*)>;
using TracePtr = std::unique_ptr<qds_trace, void (*)(qds_trace*)>;
using CurvePtr = std::unique_ptr<qds_curve, void (*)(qds_curve*)>;

VocabPtr load_vocab(const std::string& path) {
  qds_vocab* v = nullptr;
  check(qds_vocab_load(path.c_str(), &v));
  return {v, qds_vocab_free};
}

CorpusPtr load_corpus(const std::string& path, const qds_vocab* v, int max_len) {
  qds_corpus* c = nullptr;
  check(qds_corpus_load(path.c_str(), v, max_len, &c));
  return {c, qds_corpus_free};
}

ModelPtr load_model(const std::string& path) {
  qds_model* m = nullptr;
  check(qds_model_load(path.c_str(), &m));
  return {m, qds_model_free};
}

DiscPtr load_disc(const std::string& path) {
  qds_disc* d = nullptr;
  check(qds_disc_load(path.c_str(), &d));
  return {d, qds_disc_free};
}

void print_progress(const qds_trace_record* rec, void*) {
  std::fprintf(stderr, "[%s] step %ld  train_nll=%.4f  valid_nll=%.4f  (%.1fs)\n", rec->phase,
               rec->step, rec->train_nll, rec->valid_nll, rec->seconds);
}

std::string fmt_g(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// shared option groups
// ---------------------------------------------------------------------------

struct CommonOpts {
  bool timing_off = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->set_config("--config", "", "flat key=value config file; flags override file entries");
  cmd->add_flag("--timing_off", opts.timing_off,
                "write 0 in wall-clock CSV columns (byte-reproducible artifacts)");
  cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

void add_train_config(CLI::App* cmd, qds_train_config& cfg, const std::string& prefix = "",
                      bool with_seed = true) {
  auto name = [&](const char* field) { return "--" + prefix + field; };
  cmd->add_option(name("learning_rate"), cfg.learning_rate);
  cmd->add_option(name("batch_size"), cfg.batch_size);
  cmd->add_option(name("max_epochs"), cfg.max_epochs);
  cmd->add_option(name("grad_clip_norm"), cfg.grad_clip_norm);
  cmd->add_option(name("adam_beta1"), cfg.adam_beta1);
  cmd->add_option(name("adam_beta2"), cfg.adam_beta2);
  cmd->add_option(name("adam_eps"), cfg.adam_eps);
  cmd->add_option(name("early_stop_patience"), cfg.early_stop_patience);
  cmd->add_option(name("train_temperature"), cfg.train_temperature);
  if (with_seed) cmd->add_option(name("seed"), cfg.seed);
}

void add_adv_config(CLI::App* cmd, qds_adv_config& cfg) {
  cmd->add_option("--rollout_count", cfg.rollout_count);
  cmd->add_option("--pretrain_epochs", cfg.pretrain_epochs);
  cmd->add_option("--disc_steps_per_gen_step", cfg.disc_steps_per_gen_step);
  cmd->add_option("--baseline_learning_rate", cfg.baseline_learning_rate);
  cmd->add_option("--entropy_bonus_weight", cfg.entropy_bonus_weight);
  cmd->add_option("--mle_interleave_ratio", cfg.mle_interleave_ratio);
  cmd->add_option("--adv_steps", cfg.adv_steps);
  cmd->add_option("--adv_seed", cfg.seed);
  cmd->add_option("--disc_learning_rate", cfg.disc_learning_rate);
  cmd->add_option("--eval_every", cfg.eval_every);
  cmd->add_option("--max_len", cfg.max_len);
  cmd->add_option("--fixed_len", cfg.fixed_len);
  cmd->add_flag("--sequence_level_reward{false}", cfg.step_level_reward,
                "use one sequence-level reward instead of per-step rollouts")
      ->default_val(true);
  cmd->add_option("--collapse_window", cfg.collapse_window);
  add_train_config(cmd, cfg.base);
}

struct DecoderOpts {
  std::string strategy = "ancestral";
  qds_decoder_config cfg{};
  std::string disc_path;
  int local_beam = 0;  // >0 selects deterministic beam search instead
};

void add_decoder_config(CLI::App* cmd, DecoderOpts& opts) {
  qds_decoder_config_defaults(&opts.cfg);
  cmd->add_option("--strategy", opts.strategy,
                  "ancestral | greedy | beam | gen-rejection | disc-rejection");
  cmd->add_option("--alpha", opts.cfg.alpha, "softmax temperature");
  cmd->add_option("--beam_size", opts.cfg.beam_size);
  cmd->add_option("--threshold", opts.cfg.threshold, "nats/token acceptance floor");
  cmd->add_option("--disc_threshold", opts.cfg.disc_threshold);
  cmd->add_option("--max_attempts", opts.cfg.max_attempts);
  cmd->add_option("--max_len", opts.cfg.max_len);
  cmd->add_option("--fixed_len", opts.cfg.fixed_len);
  cmd->add_option("--seed", opts.cfg.seed);
  cmd->add_option("--disc", opts.disc_path, "discriminator model (disc-rejection)");
  cmd->add_option("--local_beam", opts.local_beam,
                  "deterministic beam search of this width (diagnostic; ignores --strategy)");
}

qds_strategy parse_strategy(const std::string& s) {
  if (s == "ancestral") return QDS_STRATEGY_ANCESTRAL;
  if (s == "greedy") return QDS_STRATEGY_GREEDY;
  if (s == "beam" || s == "stochastic-beam") return QDS_STRATEGY_STOCHASTIC_BEAM;
  if (s == "gen-rejection") return QDS_STRATEGY_GEN_REJECTION;
  if (s == "disc-rejection") return QDS_STRATEGY_DISC_REJECTION;
  die("unknown strategy '" + s + "'");
}

const char* strategy_str(qds_strategy s) {
  switch (s) {
    case QDS_STRATEGY_ANCESTRAL: return "ancestral";
    case QDS_STRATEGY_GREEDY: return "greedy";
    case QDS_STRATEGY_STOCHASTIC_BEAM: return "stochastic_beam";
    case QDS_STRATEGY_GEN_REJECTION: return "gen_rejection";
    case QDS_STRATEGY_DISC_REJECTION: return "disc_rejection";
  }
  return "unknown";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdsweep: train, decode and evaluate small sequence models along the "
               "quality-diversity trade-off"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qds_version());

  // ------------------------------------------------------------- oracle-gen
  struct {
    CommonOpts common;
    int vocab_size = 100;
    uint64_t seed = 7;
    std::string out = "oracle.model";
    std::string vocab_out;
  } og;
  {
    auto* cmd = app.add_subcommand("oracle-gen",
                                   "create a fixed random oracle model and its vocabulary");
    add_common(cmd, og.common);
    cmd->add_option("--vocab_size", og.vocab_size, "total vocabulary size incl. reserved ids");
    cmd->add_option("--seed", og.seed);
    cmd->add_option("--out", og.out, "oracle model file");
    cmd->add_option("--vocab_out", og.vocab_out, "write the synthetic vocabulary here");
    cmd->callback([&] {
      qds_model* m = nullptr;
      check(qds_model_oracle(og.vocab_size, og.seed, &m));
      ModelPtr model(m, qds_model_free);
      check(qds_model_save(m, og.out.c_str()));
      if (!og.vocab_out.empty()) {
        qds_vocab* v = nullptr;
        check(qds_vocab_synthetic(og.vocab_size, &v));
        VocabPtr vocab(v, qds_vocab_free);
        check(qds_vocab_save(v, og.vocab_out.c_str()));
      }
      std::fprintf(stderr, "wrote %s\n", og.out.c_str());
    });
  }

  // ------------------------------------------------------------------ train
  struct {
    CommonOpts common;
    std::string train_path, valid_path, vocab_path, resume;
    int build_vocab = 0;
    std::string vocab_out;
    int max_len = 52;
    int embed_dim = 32, hidden_dim = 32;
    uint64_t init_seed = 1;
    double init_scale = 0.1;
    std::string out = "model.bin", trace_out;
    qds_train_config cfg{};
  } tr;
  {
    auto* cmd = app.add_subcommand("train", "maximum-likelihood training (teacher forcing)");
    add_common(cmd, tr.common);
    qds_train_config_defaults(&tr.cfg);
    cmd->add_option("--train", tr.train_path)->required();
    cmd->add_option("--valid", tr.valid_path)->required();
    cmd->add_option("--vocab", tr.vocab_path, "vocabulary file");
    cmd->add_option("--build_vocab", tr.build_vocab,
                    "build a vocabulary of this many content tokens from --train");
    cmd->add_option("--vocab_out", tr.vocab_out, "save the built vocabulary here");
    cmd->add_option("--max_len", tr.max_len);
    cmd->add_option("--embed_dim", tr.embed_dim);
    cmd->add_option("--hidden_dim", tr.hidden_dim);
    cmd->add_option("--init_seed", tr.init_seed);
    cmd->add_option("--init_scale", tr.init_scale);
    cmd->add_option("--resume", tr.resume, "start from this model instead of fresh init");
    cmd->add_option("--out", tr.out);
    cmd->add_option("--trace_out", tr.trace_out, "training trace CSV");
    add_train_config(cmd, tr.cfg);
    cmd->callback([&] {
      VocabPtr vocab(nullptr, qds_vocab_free);
      if (tr.build_vocab > 0) {
        qds_vocab* v = nullptr;
        check(qds_vocab_build_file(tr.train_path.c_str(), tr.build_vocab, &v));
        vocab = VocabPtr(v, qds_vocab_free);
        if (!tr.vocab_out.empty()) check(qds_vocab_save(v, tr.vocab_out.c_str()));
      } else if (!tr.vocab_path.empty()) {
        vocab = load_vocab(tr.vocab_path);
      } else {
        die("train: need --vocab or --build_vocab");
      }
      auto train = load_corpus(tr.train_path, vocab.get(), tr.max_len);
      auto valid = load_corpus(tr.valid_path, vocab.get(), tr.max_len);
      ModelPtr model(nullptr, qds_model_free);
      if (!tr.resume.empty()) {
        model = load_model(tr.resume);
      } else {
        qds_model* m = nullptr;
        check(qds_model_init(qds_vocab_size(vocab.get()), tr.embed_dim, tr.hidden_dim,
                             tr.init_seed, tr.init_scale, &m));
        model = ModelPtr(m, qds_model_free);
      }
      qds_trace* trace = nullptr;
      check(qds_train_mle(model.get(), train.get(), valid.get(), &tr.cfg,
                          tr.common.quiet ? nullptr : print_progress, nullptr, &trace));
      TracePtr trace_ptr(trace, qds_trace_free);
      check(qds_model_save(model.get(), tr.out.c_str()));
      if (!tr.trace_out.empty())
        check(qds_trace_write_csv(trace, tr.trace_out.c_str(), tr.common.timing_off));
      double nll = 0.0;
      check(qds_evaluate_nll(model.get(), valid.get(), &nll));
      std::fprintf(stderr, "wrote %s (valid nll %.4f)\n", tr.out.c_str(), nll);
    });
  }

  // -------------------------------------------------------------- adv-train
  struct {
    CommonOpts common;
    std::string train_path, valid_path, vocab_path, resume;
    int max_len_corpus = 52;
    int embed_dim = 32, hidden_dim = 32;
    uint64_t init_seed = 1, disc_seed = 2;
    double init_scale = 0.1, disc_scale = 0.1;
    std::string out = "model_adv.bin", disc_out, trace_out;
    qds_adv_config cfg{};
  } at;
  {
    auto* cmd = app.add_subcommand(
        "adv-train", "adversarial fine-tuning (REINFORCE with Monte-Carlo rollouts)");
    add_common(cmd, at.common);
    qds_adv_config_defaults(&at.cfg);
    cmd->add_option("--train", at.train_path)->required();
    cmd->add_option("--valid", at.valid_path)->required();
    cmd->add_option("--vocab", at.vocab_path)->required();
    cmd->add_option("--corpus_max_len", at.max_len_corpus);
    cmd->add_option("--embed_dim", at.embed_dim);
    cmd->add_option("--hidden_dim", at.hidden_dim);
    cmd->add_option("--init_seed", at.init_seed);
    cmd->add_option("--init_scale", at.init_scale);
    cmd->add_option("--disc_seed", at.disc_seed);
    cmd->add_option("--disc_scale", at.disc_scale);
    cmd->add_option("--resume", at.resume, "generator to fine-tune (skips fresh init)");
    cmd->add_option("--out", at.out);
    cmd->add_option("--disc_out", at.disc_out);
    cmd->add_option("--trace_out", at.trace_out);
    add_adv_config(cmd, at.cfg);
    cmd->callback([&] {
      auto vocab = load_vocab(at.vocab_path);
      auto train = load_corpus(at.train_path, vocab.get(), at.max_len_corpus);
      auto valid = load_corpus(at.valid_path, vocab.get(), at.max_len_corpus);
      ModelPtr model(nullptr, qds_model_free);
      if (!at.resume.empty()) {
        model = load_model(at.resume);
      } else {
        qds_model* m = nullptr;
        check(qds_model_init(qds_vocab_size(vocab.get()), at.embed_dim, at.hidden_dim,
                             at.init_seed, at.init_scale, &m));
        model = ModelPtr(m, qds_model_free);
      }
      qds_disc* d = nullptr;
      check(qds_disc_init(qds_model_vocab_size(model.get()), at.embed_dim, at.hidden_dim,
                          at.disc_seed, at.disc_scale, &d));
      DiscPtr disc(d, qds_disc_free);
      qds_trace* trace = nullptr;
      check(qds_train_adversarial(model.get(), disc.get(), train.get(), valid.get(), &at.cfg,
                                  at.common.quiet ? nullptr : print_progress, nullptr, &trace));
      TracePtr trace_ptr(trace, qds_trace_free);
      for (long i = 0; i < qds_trace_warning_count(trace); ++i)
        std::fprintf(stderr, "warning: %s\n", qds_trace_warning(trace, i));
      check(qds_model_save(model.get(), at.out.c_str()));
      if (!at.disc_out.empty()) check(qds_disc_save(disc.get(), at.disc_out.c_str()));
      if (!at.trace_out.empty())
        check(qds_trace_write_csv(trace, at.trace_out.c_str(), at.common.timing_off));
      std::fprintf(stderr, "wrote %s\n", at.out.c_str());
    });
  }

  // ----------------------------------------------------------------- sample
  struct {
    CommonOpts common;
    std::string model_path, vocab_path;
    DecoderOpts dec;
    int n = 1000;
    std::string out = "samples.txt", meta_out;
  } sm;
  {
    auto* cmd = app.add_subcommand("sample", "generate a corpus under a decoding strategy");
    add_common(cmd, sm.common);
    cmd->add_option("--model", sm.model_path)->required();
    cmd->add_option("--vocab", sm.vocab_path)->required();
    cmd->add_option("-n,--n", sm.n, "number of sentences");
    cmd->add_option("--out", sm.out);
    cmd->add_option("--meta_out", sm.meta_out, "sidecar JSON with strategy/seed/timing");
    add_decoder_config(cmd, sm.dec);
    cmd->callback([&] {
      auto model = load_model(sm.model_path);
      auto vocab = load_vocab(sm.vocab_path);
      DiscPtr disc(nullptr, qds_disc_free);
      sm.dec.cfg.strategy = parse_strategy(sm.dec.strategy);
      if (!sm.dec.disc_path.empty()) {
        disc = load_disc(sm.dec.disc_path);
        sm.dec.cfg.discriminator = disc.get();
      }
      qds_corpus* out = nullptr;
      qds_sample_stats stats{};
      if (sm.dec.local_beam > 0) {
        check(qds_sample_local_beam(model.get(), vocab.get(), sm.dec.local_beam,
                                    sm.dec.cfg.max_len, sm.dec.cfg.fixed_len, &out));
        stats.attempts = 1;
        stats.acceptance_rate = 1.0;
      } else {
        check(qds_sample(model.get(), vocab.get(), &sm.dec.cfg, sm.n, &out, &stats));
      }
      CorpusPtr corpus(out, qds_corpus_free);
      check(qds_corpus_save(out, sm.out.c_str()));
      if (!sm.meta_out.empty()) {
        std::ofstream meta(sm.meta_out, std::ios::binary);
        if (!meta) die("cannot write " + sm.meta_out);
        const double elapsed = sm.common.timing_off ? 0.0 : stats.elapsed_seconds;
        char elapsed_buf[40];
        std::snprintf(elapsed_buf, sizeof elapsed_buf, "%.6f", elapsed);
        meta << "{\n"
             << "  \"strategy\": \""
             << (sm.dec.local_beam > 0 ? "local_beam" : strategy_str(sm.dec.cfg.strategy))
             << "\",\n"
             << "  \"alpha\": " << fmt_g(sm.dec.cfg.alpha) << ",\n"
             << "  \"beam_size\": "
             << (sm.dec.local_beam > 0 ? sm.dec.local_beam : sm.dec.cfg.beam_size) << ",\n"
             << "  \"threshold\": " << fmt_g(sm.dec.cfg.threshold) << ",\n"
             << "  \"disc_threshold\": " << fmt_g(sm.dec.cfg.disc_threshold) << ",\n"
             << "  \"max_len\": " << sm.dec.cfg.max_len << ",\n"
             << "  \"fixed_len\": " << sm.dec.cfg.fixed_len << ",\n"
             << "  \"seed\": " << sm.dec.cfg.seed << ",\n"
             << "  \"n\": " << qds_corpus_size(out) << ",\n"
             << "  \"attempts\": " << stats.attempts << ",\n"
             << "  \"acceptance_rate\": " << fmt_g(stats.acceptance_rate) << ",\n"
             << "  \"mean_loglik\": " << fmt_g(stats.mean_loglik) << ",\n"
             << "  \"elapsed_seconds\": " << elapsed_buf << "\n"
             << "}\n";
      }
      std::fprintf(stderr, "wrote %d sentences to %s\n", qds_corpus_size(out), sm.out.c_str());
    });
  }

  // ------------------------------------------------------------------- eval
  struct {
    CommonOpts common;
    std::string hyp_path, ref_path, vocab_path, model_path, scorer_path;
    std::string real_train, real_valid, real_test;
    std::vector<std::string> metrics{"bleu5", "sbleu5"};
    int max_len = 250;
    DecoderOpts dec;
    int n = 1000;
    double alpha_score = 1.0;
    qds_metric_config mcfg{};
    qds_train_config lm_cfg{};
    std::string out = "eval.csv";
  } ev;
  {
    auto* cmd = app.add_subcommand(
        "eval", "quality/diversity metrics for a corpus (or freshly sampled model output)");
    add_common(cmd, ev.common);
    qds_metric_config_defaults(&ev.mcfg);
    qds_train_config_defaults(&ev.lm_cfg);
    ev.lm_cfg.max_epochs = 20;
    cmd->add_option("--hyp", ev.hyp_path, "hypothesis corpus file");
    cmd->add_option("--model", ev.model_path, "sample hypotheses from this model instead");
    cmd->add_option("-n,--n", ev.n, "sample count when --model is used");
    cmd->add_option("--ref", ev.ref_path, "reference corpus (bleu)");
    cmd->add_option("--vocab", ev.vocab_path)->required();
    cmd->add_option("--real_train", ev.real_train, "real training corpus (lm/rlm/unigram)");
    cmd->add_option("--real_valid", ev.real_valid, "real validation corpus (lm/rlm)");
    cmd->add_option("--real_test", ev.real_test, "real test corpus (rlm/unigram)");
    cmd->add_option("--scorer", ev.scorer_path, "scoring model for the nll metric");
    cmd->add_option("--alpha_score", ev.alpha_score, "temperature for the nll metric");
    cmd->add_option("--metrics", ev.metrics,
                    "bleuN | sbleuN | nll | lm | rlm | unigram (comma separated)")
        ->delimiter(',');
    cmd->add_option("--corpus_max_len", ev.max_len);
    cmd->add_option("--epsilon", ev.mcfg.epsilon);
    cmd->add_option("--ref_cap", ev.mcfg.ref_cap);
    cmd->add_option("--ref_cap_seed", ev.mcfg.ref_cap_seed);
    add_train_config(cmd, ev.lm_cfg, "lm_");
    cmd->add_option("--out", ev.out);
    add_decoder_config(cmd, ev.dec);
    cmd->callback([&] {
      auto vocab = load_vocab(ev.vocab_path);
      CorpusPtr hyp(nullptr, qds_corpus_free);
      ModelPtr model(nullptr, qds_model_free);
      if (!ev.model_path.empty()) {
        model = load_model(ev.model_path);
        ev.dec.cfg.strategy = parse_strategy(ev.dec.strategy);
        DiscPtr disc(nullptr, qds_disc_free);
        if (!ev.dec.disc_path.empty()) {
          disc = load_disc(ev.dec.disc_path);
          ev.dec.cfg.discriminator = disc.get();
        }
        qds_corpus* out = nullptr;
        check(qds_sample(model.get(), vocab.get(), &ev.dec.cfg, ev.n, &out, nullptr));
        hyp = CorpusPtr(out, qds_corpus_free);
      } else if (!ev.hyp_path.empty()) {
        hyp = load_corpus(ev.hyp_path, vocab.get(), ev.max_len);
      } else {
        die("eval: need --hyp or --model");
      }
      CorpusPtr refs(nullptr, qds_corpus_free);
      if (!ev.ref_path.empty()) refs = load_corpus(ev.ref_path, vocab.get(), ev.max_len);
      CorpusPtr rtrain(nullptr, qds_corpus_free), rvalid(nullptr, qds_corpus_free),
          rtest(nullptr, qds_corpus_free);
      if (!ev.real_train.empty()) rtrain = load_corpus(ev.real_train, vocab.get(), ev.max_len);
      if (!ev.real_valid.empty()) rvalid = load_corpus(ev.real_valid, vocab.get(), ev.max_len);
      if (!ev.real_test.empty()) rtest = load_corpus(ev.real_test, vocab.get(), ev.max_len);

      std::vector<qds_metric_report> rows;
      std::vector<std::string> names;  // keeps const char* targets alive
      names.reserve(ev.metrics.size());
      for (const auto& metric : ev.metrics) {
        qds_metric_report row{};
        row.samples = qds_corpus_size(hyp.get());
        row.epsilon = ev.mcfg.epsilon;
        double value = 0.0;
        if (metric.rfind("bleu", 0) == 0) {
          const int n = metric.size() > 4 ? std::atoi(metric.c_str() + 4) : 5;
          if (!refs) die("eval: bleu needs --ref");
          check(qds_bleu(hyp.get(), refs.get(), n, &ev.mcfg, &value));
          names.push_back("bleu");
          row.n = n;
          row.references = qds_corpus_size(refs.get());
          row.seed = ev.mcfg.ref_cap_seed;
        } else if (metric.rfind("sbleu", 0) == 0) {
          const int n = metric.size() > 5 ? std::atoi(metric.c_str() + 5) : 5;
          check(qds_self_bleu(hyp.get(), n, &ev.mcfg, &value));
          names.push_back("self_bleu");
          row.n = n;
          row.references = qds_corpus_size(hyp.get());
          row.seed = ev.mcfg.ref_cap_seed;
        } else if (metric == "nll") {
          if (ev.scorer_path.empty()) die("eval: nll needs --scorer");
          auto scorer = load_model(ev.scorer_path);
          check(qds_nll_under_model(scorer.get(), hyp.get(), ev.alpha_score, &value));
          names.push_back("nll");
        } else if (metric == "lm") {
          if (!rtrain || !rvalid) die("eval: lm needs --real_train and --real_valid");
          check(qds_lm_score(rtrain.get(), rvalid.get(), hyp.get(), &ev.lm_cfg, &value));
          names.push_back("lm_score");
          row.references = qds_corpus_size(rtrain.get());
          row.seed = ev.lm_cfg.seed;
        } else if (metric == "rlm") {
          if (!rtest) die("eval: rlm needs --real_test");
          check(qds_reverse_lm_score(hyp.get(), rtest.get(), &ev.lm_cfg, &value));
          names.push_back("reverse_lm_score");
          row.references = qds_corpus_size(rtest.get());
          row.seed = ev.lm_cfg.seed;
        } else if (metric == "unigram") {
          if (!rtrain || !rtest) die("eval: unigram needs --real_train and --real_test");
          check(qds_unigram_nll(rtrain.get(), rtest.get(), &value));
          names.push_back("unigram_nll");
          row.references = qds_corpus_size(rtrain.get());
        } else {
          die("eval: unknown metric '" + metric + "'");
        }
        row.value = value;
        rows.push_back(row);
      }
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i].metric = names[i].c_str();
      check(qds_write_eval_csv(rows.data(), static_cast<int>(rows.size()), ev.out.c_str()));
      for (const auto& row : rows)
        std::printf("%s,%d,%s\n", row.metric, row.n, fmt_g(row.value).c_str());
      std::fprintf(stderr, "wrote %s\n", ev.out.c_str());
    });
  }

  // ------------------------------------------------------------------ sweep
  struct {
    CommonOpts common;
    std::string model_path, vocab_path;
    std::string control = "temperature", pair = "bleu";
    std::vector<double> values;
    std::vector<uint64_t> seeds{1, 2, 3};
    int samples = 2000, bleu_n = 5, max_len = 52, fixed_len = 0, max_attempts = 1000;
    std::string ref_path, real_train, real_valid, real_test, oracle_path, disc_path;
    double diversity_ceiling = std::nan("");
    qds_train_config lm_cfg{};
    std::string out = "curve.csv";
    int corpus_max_len = 250;
  } sw;
  {
    auto* cmd = app.add_subcommand("sweep",
                                   "trace a quality-diversity curve over a control grid");
    add_common(cmd, sw.common);
    qds_train_config_defaults(&sw.lm_cfg);
    sw.lm_cfg.max_epochs = 20;
    cmd->add_option("--model", sw.model_path)->required();
    cmd->add_option("--vocab", sw.vocab_path)->required();
    cmd->add_option("--control", sw.control,
                    "temperature | beam | gen-threshold | disc-threshold");
    cmd->add_option("--values", sw.values, "control grid (entropy-descending)")
        ->delimiter(',');
    cmd->add_option("--pair", sw.pair, "bleu | lm | oracle");
    cmd->add_option("--samples_per_point", sw.samples);
    cmd->add_option("--seeds", sw.seeds)->delimiter(',');
    cmd->add_option("--bleu_n", sw.bleu_n);
    cmd->add_option("--max_len", sw.max_len);
    cmd->add_option("--fixed_len", sw.fixed_len);
    cmd->add_option("--max_attempts", sw.max_attempts);
    cmd->add_option("--ref", sw.ref_path);
    cmd->add_option("--real_train", sw.real_train);
    cmd->add_option("--real_valid", sw.real_valid);
    cmd->add_option("--real_test", sw.real_test);
    cmd->add_option("--oracle", sw.oracle_path);
    cmd->add_option("--disc", sw.disc_path);
    cmd->add_option("--diversity_ceiling", sw.diversity_ceiling);
    cmd->add_option("--corpus_max_len", sw.corpus_max_len);
    add_train_config(cmd, sw.lm_cfg, "lm_");
    cmd->add_option("--out", sw.out);
    cmd->callback([&] {
      auto model = load_model(sw.model_path);
      auto vocab = load_vocab(sw.vocab_path);
      qds_sweep_spec spec;
      qds_sweep_spec_defaults(&spec);
      if (sw.control == "temperature") spec.control = QDS_CONTROL_TEMPERATURE;
      else if (sw.control == "beam") spec.control = QDS_CONTROL_BEAM_SIZE;
      else if (sw.control == "gen-threshold") spec.control = QDS_CONTROL_GEN_THRESHOLD;
      else if (sw.control == "disc-threshold") spec.control = QDS_CONTROL_DISC_THRESHOLD;
      else die("sweep: unknown control '" + sw.control + "'");
      if (sw.pair == "bleu") spec.metric_pair = QDS_PAIR_BLEU_SBLEU;
      else if (sw.pair == "lm") spec.metric_pair = QDS_PAIR_LM_RLM;
      else if (sw.pair == "oracle") spec.metric_pair = QDS_PAIR_ORACLE_NLL;
      else die("sweep: unknown metric pair '" + sw.pair + "'");
      if (sw.values.empty())
        sw.values = {1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.6, 0.5, 0.4, 0.2, 0.05, 0.001};
      spec.control_values = sw.values.data();
      spec.n_control_values = static_cast<int>(sw.values.size());
      spec.samples_per_point = sw.samples;
      spec.seeds = sw.seeds.data();
      spec.n_seeds = static_cast<int>(sw.seeds.size());
      spec.bleu_n = sw.bleu_n;
      spec.max_len = sw.max_len;
      spec.fixed_len = sw.fixed_len;
      spec.max_attempts = sw.max_attempts;
      spec.lm_cfg = sw.lm_cfg;
      spec.diversity_ceiling = sw.diversity_ceiling;
      CorpusPtr refs(nullptr, qds_corpus_free), rtrain(nullptr, qds_corpus_free),
          rvalid(nullptr, qds_corpus_free), rtest(nullptr, qds_corpus_free);
      ModelPtr oracle(nullptr, qds_model_free);
      DiscPtr disc(nullptr, qds_disc_free);
      if (!sw.ref_path.empty()) {
        refs = load_corpus(sw.ref_path, vocab.get(), sw.corpus_max_len);
        spec.references = refs.get();
      }
      if (!sw.real_train.empty()) {
        rtrain = load_corpus(sw.real_train, vocab.get(), sw.corpus_max_len);
        spec.real_train = rtrain.get();
      }
      if (!sw.real_valid.empty()) {
        rvalid = load_corpus(sw.real_valid, vocab.get(), sw.corpus_max_len);
        spec.real_valid = rvalid.get();
      }
      if (!sw.real_test.empty()) {
        rtest = load_corpus(sw.real_test, vocab.get(), sw.corpus_max_len);
        spec.real_test = rtest.get();
      }
      if (!sw.oracle_path.empty()) {
        oracle = load_model(sw.oracle_path);
        spec.oracle = oracle.get();
      }
      if (!sw.disc_path.empty()) {
        disc = load_disc(sw.disc_path);
        spec.discriminator = disc.get();
      }
      qds_curve* curve = nullptr;
      check(qds_run_sweep(model.get(), &spec, sw.model_path.c_str(), &curve));
      CurvePtr curve_ptr(curve, qds_curve_free);
      check(qds_curve_write_csv(curve, sw.out.c_str(), sw.common.timing_off));
      std::fprintf(stderr, "wrote %ld points to %s\n", qds_curve_size(curve), sw.out.c_str());
    });
  }

  // -------------------------------------------------------------------- auc
  struct {
    CommonOpts common;
    std::string curve_path;
    double lo = 0.0, hi = 0.0;
    std::string out;
  } au;
  {
    auto* cmd = app.add_subcommand("auc", "area under a sweep curve inside a diversity window");
    add_common(cmd, au.common);
    cmd->add_option("--curve", au.curve_path)->required();
    cmd->add_option("--lo", au.lo, "diversity window lower edge")->required();
    cmd->add_option("--hi", au.hi, "diversity window upper edge")->required();
    cmd->add_option("--out", au.out, "optional CSV (model,window_lo,window_hi,auc)");
    cmd->callback([&] {
      qds_curve* curve = nullptr;
      check(qds_curve_load_csv(au.curve_path.c_str(), &curve));
      CurvePtr curve_ptr(curve, qds_curve_free);
      double value = 0.0;
      check(qds_curve_auc(curve, au.lo, au.hi, &value));
      std::printf("%s\n", fmt_g(value).c_str());
      if (!au.out.empty()) {
        std::ofstream out(au.out, std::ios::binary);
        if (!out) die("cannot write " + au.out);
        out << "model,window_lo,window_hi,auc\n"
            << au.curve_path << ',' << fmt_g(au.lo) << ',' << fmt_g(au.hi) << ','
            << fmt_g(value) << '\n';
      }
    });
  }

  // ------------------------------------------------------------------ bench
  struct {
    CommonOpts common;
    std::string model_path, disc_path;
    std::string strategies = "ancestral:1.0,ancestral:0.5,greedy,beam:2,beam:3";
    int n = 2000, max_len = 52, fixed_len = 0, max_attempts = 100000;
    uint64_t seed = 1;
    std::string out = "bench.csv";
  } be;
  {
    auto* cmd = app.add_subcommand("bench", "wall-clock comparison of decoding strategies");
    add_common(cmd, be.common);
    cmd->add_option("--model", be.model_path)->required();
    cmd->add_option("--disc", be.disc_path);
    cmd->add_option("--strategies", be.strategies,
                    "comma list: ancestral:A | greedy | beam:K[:A] | gen-rejection:T[:A] | "
                    "disc-rejection:TD");
    cmd->add_option("-n,--n", be.n, "sentences per strategy");
    cmd->add_option("--max_len", be.max_len);
    cmd->add_option("--fixed_len", be.fixed_len);
    cmd->add_option("--max_attempts", be.max_attempts);
    cmd->add_option("--seed", be.seed);
    cmd->add_option("--out", be.out);
    cmd->callback([&] {
      auto model = load_model(be.model_path);
      DiscPtr disc(nullptr, qds_disc_free);
      if (!be.disc_path.empty()) disc = load_disc(be.disc_path);
      std::vector<qds_decoder_config> cfgs;
      std::string item;
      std::stringstream ss(be.strategies);
      while (std::getline(ss, item, ',')) {
        qds_decoder_config cfg;
        qds_decoder_config_defaults(&cfg);
        cfg.max_len = be.max_len;
        cfg.fixed_len = be.fixed_len;
        cfg.max_attempts = be.max_attempts;
        cfg.seed = be.seed;
        std::vector<std::string> parts;
        std::stringstream ps(item);
        std::string part;
        while (std::getline(ps, part, ':')) parts.push_back(part);
        if (parts.empty()) continue;
        const std::string& name = parts[0];
        if (name == "ancestral") {
          cfg.strategy = QDS_STRATEGY_ANCESTRAL;
          if (parts.size() > 1) cfg.alpha = std::stod(parts[1]);
        } else if (name == "greedy") {
          cfg.strategy = QDS_STRATEGY_GREEDY;
        } else if (name == "beam") {
          cfg.strategy = QDS_STRATEGY_STOCHASTIC_BEAM;
          if (parts.size() > 1) cfg.beam_size = std::stoi(parts[1]);
          if (parts.size() > 2) cfg.alpha = std::stod(parts[2]);
        } else if (name == "gen-rejection") {
          cfg.strategy = QDS_STRATEGY_GEN_REJECTION;
          if (parts.size() > 1) cfg.threshold = std::stod(parts[1]);
          if (parts.size() > 2) cfg.alpha = std::stod(parts[2]);
        } else if (name == "disc-rejection") {
          cfg.strategy = QDS_STRATEGY_DISC_REJECTION;
          if (parts.size() > 1) cfg.disc_threshold = std::stod(parts[1]);
          if (!disc) die("bench: disc-rejection needs --disc");
          cfg.discriminator = disc.get();
        } else {
          die("bench: unknown strategy '" + name + "'");
        }
        cfgs.push_back(cfg);
      }
      if (cfgs.empty()) die("bench: no strategies");
      check(qds_bench(model.get(), cfgs.data(), static_cast<int>(cfgs.size()), be.n,
                      be.out.c_str(), be.common.timing_off));
      std::ifstream in(be.out);
      std::string line;
      while (std::getline(in, line)) std::printf("%s\n", line.c_str());
    });
  }

  // ------------------------------------------------------------- grad-check
  struct {
    CommonOpts common;
    int vocab_size = 20, embed_dim = 6, hidden_dim = 6;
    uint64_t model_seed = 1, sample_seed = 2;
    double scale = 0.4;
    int sentences = 3, sentence_len = 8;
    double tolerance = 1e-3, fd_step = 1e-4;
    std::string out;
  } gc;
  {
    auto* cmd = app.add_subcommand("grad-check",
                                   "analytic gradients vs central finite differences");
    add_common(cmd, gc.common);
    cmd->add_option("--vocab_size", gc.vocab_size);
    cmd->add_option("--embed_dim", gc.embed_dim);
    cmd->add_option("--hidden_dim", gc.hidden_dim);
    cmd->add_option("--model_seed", gc.model_seed);
    cmd->add_option("--scale", gc.scale);
    cmd->add_option("--sentences", gc.sentences);
    cmd->add_option("--sentence_len", gc.sentence_len);
    cmd->add_option("--tolerance", gc.tolerance);
    cmd->add_option("--fd_step", gc.fd_step);
    cmd->add_option("--seed", gc.sample_seed);
    cmd->add_option("--out", gc.out, "per-block CSV");
    cmd->callback([&] {
      qds_model* m = nullptr;
      check(qds_model_init(gc.vocab_size, gc.embed_dim, gc.hidden_dim, gc.model_seed, gc.scale,
                           &m));
      ModelPtr model(m, qds_model_free);
      qds_vocab* v = nullptr;
      check(qds_vocab_synthetic(gc.vocab_size, &v));
      VocabPtr vocab(v, qds_vocab_free);
      qds_decoder_config dec;
      qds_decoder_config_defaults(&dec);
      dec.max_len = gc.sentence_len;
      dec.fixed_len = gc.sentence_len;
      dec.seed = gc.sample_seed;
      qds_corpus* sentences = nullptr;
      check(qds_sample(model.get(), vocab.get(), &dec, gc.sentences, &sentences, nullptr));
      CorpusPtr corpus(sentences, qds_corpus_free);
      double max_rel = 0.0;
      int pass = 0;
      check(qds_gradient_check(model.get(), sentences, gc.sentences, gc.tolerance, gc.fd_step,
                               gc.out.empty() ? nullptr : gc.out.c_str(), &max_rel, &pass));
      std::printf("max_rel_err %s tolerance %s : %s\n", fmt_g(max_rel).c_str(),
                  fmt_g(gc.tolerance).c_str(), pass ? "PASS" : "FAIL");
      if (!pass) std::exit(1);
    });
  }

  // --------------------------------------------------- synthetic-experiment
  struct {
    CommonOpts common;
    qds_synth_config cfg{};
    std::vector<double> alpha_grid, table1_alphas;
    std::vector<uint64_t> seeds;
    bool no_adversarial = false;
    std::string out_dir = "synthetic_out";
  } se;
  {
    auto* cmd = app.add_subcommand(
        "synthetic-experiment",
        "oracle task end to end: data, students, sweeps, reference table and AUCs");
    add_common(cmd, se.common);
    qds_synth_config_defaults(&se.cfg);
    cmd->add_option("--oracle_vocab", se.cfg.oracle_vocab);
    cmd->add_option("--oracle_seed", se.cfg.oracle_seed);
    cmd->add_option("--seq_len", se.cfg.seq_len);
    cmd->add_option("--n_train", se.cfg.n_train);
    cmd->add_option("--n_valid", se.cfg.n_valid);
    cmd->add_option("--n_test", se.cfg.n_test);
    cmd->add_option("--student_embed", se.cfg.student_embed);
    cmd->add_option("--student_hidden", se.cfg.student_hidden);
    cmd->add_option("--alpha_grid", se.alpha_grid)->delimiter(',');
    cmd->add_option("--table1_alphas", se.table1_alphas)->delimiter(',');
    cmd->add_option("--table1_samples", se.cfg.table1_samples);
    cmd->add_option("--samples_per_point", se.cfg.samples_per_point);
    cmd->add_option("--seeds", se.seeds)->delimiter(',');
    cmd->add_flag("--no_adversarial", se.no_adversarial);
    cmd->add_option("--out_dir", se.out_dir);
    add_train_config(cmd, se.cfg.mle, "mle_");
    cmd->add_option("--rollout_count", se.cfg.adv.rollout_count);
    cmd->add_option("--pretrain_epochs", se.cfg.adv.pretrain_epochs);
    cmd->add_option("--disc_steps_per_gen_step", se.cfg.adv.disc_steps_per_gen_step);
    cmd->add_option("--baseline_learning_rate", se.cfg.adv.baseline_learning_rate);
    cmd->add_option("--entropy_bonus_weight", se.cfg.adv.entropy_bonus_weight);
    cmd->add_option("--mle_interleave_ratio", se.cfg.adv.mle_interleave_ratio);
    cmd->add_option("--adv_steps", se.cfg.adv.adv_steps);
    cmd->add_option("--adv_seed", se.cfg.adv.seed);
    cmd->add_option("--disc_learning_rate", se.cfg.adv.disc_learning_rate);
    cmd->add_option("--eval_every", se.cfg.adv.eval_every);
    add_train_config(cmd, se.cfg.adv.base, "adv_", /*with_seed=*/false);
    cmd->callback([&] {
      if (!se.alpha_grid.empty()) {
        se.cfg.alpha_grid = se.alpha_grid.data();
        se.cfg.n_alpha = static_cast<int>(se.alpha_grid.size());
      }
      if (!se.table1_alphas.empty()) {
        se.cfg.table1_alphas = se.table1_alphas.data();
        se.cfg.n_table1 = static_cast<int>(se.table1_alphas.size());
      }
      if (!se.seeds.empty()) {
        se.cfg.seeds = se.seeds.data();
        se.cfg.n_seeds = static_cast<int>(se.seeds.size());
      }
      se.cfg.run_adversarial = se.no_adversarial ? 0 : 1;
      check(qds_synthetic_experiment(&se.cfg, se.out_dir.c_str(), se.common.timing_off,
                                     se.common.quiet ? nullptr : print_progress, nullptr));
      std::fprintf(stderr, "artifacts in %s\n", se.out_dir.c_str());
      std::ifstream in(se.out_dir + "/table1.csv");
      std::string line;
      while (std::getline(in, line)) std::printf("%s\n", line.c_str());
    });
  }

  // ---------------------------------------------------------- entropy-trace
  struct {
    CommonOpts common;
    std::string train_path, valid_path, vocab_path;
    int corpus_max_len = 52;
    int embed_dim = 32, hidden_dim = 32;
    uint64_t init_seed = 1;
    double init_scale = 0.1;
    qds_train_config mle_cfg{};
    qds_adv_config adv_cfg{};
    std::string out = "entropy_trace.csv";
  } et;
  {
    auto* cmd = app.add_subcommand(
        "entropy-trace", "validation NLL across an MLE phase followed by adversarial updates");
    add_common(cmd, et.common);
    qds_train_config_defaults(&et.mle_cfg);
    qds_adv_config_defaults(&et.adv_cfg);
    cmd->add_option("--train", et.train_path)->required();
    cmd->add_option("--valid", et.valid_path)->required();
    cmd->add_option("--vocab", et.vocab_path)->required();
    cmd->add_option("--corpus_max_len", et.corpus_max_len);
    cmd->add_option("--embed_dim", et.embed_dim);
    cmd->add_option("--hidden_dim", et.hidden_dim);
    cmd->add_option("--init_seed", et.init_seed);
    cmd->add_option("--init_scale", et.init_scale);
    cmd->add_option("--out", et.out);
    add_train_config(cmd, et.mle_cfg, "mle_");
    add_adv_config(cmd, et.adv_cfg);
    cmd->callback([&] {
      auto vocab = load_vocab(et.vocab_path);
      auto train = load_corpus(et.train_path, vocab.get(), et.corpus_max_len);
      auto valid = load_corpus(et.valid_path, vocab.get(), et.corpus_max_len);
      qds_model* m = nullptr;
      check(qds_model_init(qds_vocab_size(vocab.get()), et.embed_dim, et.hidden_dim,
                           et.init_seed, et.init_scale, &m));
      ModelPtr model(m, qds_model_free);
      check(qds_entropy_trace(model.get(), train.get(), valid.get(), &et.mle_cfg, &et.adv_cfg,
                              et.common.quiet ? nullptr : print_progress, nullptr,
                              et.out.c_str(), et.common.timing_off));
      std::fprintf(stderr, "wrote %s\n", et.out.c_str());
    });
  }

  // ------------------------------------------------------- train-temp-study
  struct {
    CommonOpts common;
    std::string train_path, valid_path, ref_path, vocab_path;
    int corpus_max_len = 52;
    std::vector<double> alphas{0.8, 1.0, 1.5, 2.0};
    int embed_dim = 32, hidden_dim = 32;
    qds_train_config base{};
    int bleu_n = 5, samples = 500, max_len = 52, fixed_len = 0;
    std::string out = "train_temp_study.csv";
  } ts;
  {
    auto* cmd = app.add_subcommand(
        "train-temp-study", "one model per training temperature, evaluated at inference "
                            "alpha=1 on (-BLEU, Self-BLEU)");
    add_common(cmd, ts.common);
    qds_train_config_defaults(&ts.base);
    cmd->add_option("--train", ts.train_path)->required();
    cmd->add_option("--valid", ts.valid_path)->required();
    cmd->add_option("--ref", ts.ref_path)->required();
    cmd->add_option("--vocab", ts.vocab_path)->required();
    cmd->add_option("--corpus_max_len", ts.corpus_max_len);
    cmd->add_option("--alphas", ts.alphas, "training temperatures")->delimiter(',');
    cmd->add_option("--embed_dim", ts.embed_dim);
    cmd->add_option("--hidden_dim", ts.hidden_dim);
    cmd->add_option("--bleu_n", ts.bleu_n);
    cmd->add_option("--samples", ts.samples);
    cmd->add_option("--max_len", ts.max_len);
    cmd->add_option("--fixed_len", ts.fixed_len);
    cmd->add_option("--out", ts.out);
    add_train_config(cmd, ts.base);
    cmd->callback([&] {
      auto vocab = load_vocab(ts.vocab_path);
      auto train = load_corpus(ts.train_path, vocab.get(), ts.corpus_max_len);
      auto valid = load_corpus(ts.valid_path, vocab.get(), ts.corpus_max_len);
      auto refs = load_corpus(ts.ref_path, vocab.get(), ts.corpus_max_len);
      check(qds_train_temp_study(ts.alphas.data(), static_cast<int>(ts.alphas.size()),
                                 ts.embed_dim, ts.hidden_dim, train.get(), valid.get(),
                                 refs.get(), &ts.base, ts.bleu_n, ts.samples, ts.max_len,
                                 ts.fixed_len, ts.out.c_str()));
      std::fprintf(stderr, "wrote %s\n", ts.out.c_str());
    });
  }

  CLI11_PARSE(app, argc, argv);
  return 0;
}
