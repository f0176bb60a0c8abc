// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include "qdsweep/c_api.h"

#include <cmath>
#include <cstring>
#include <string>

#include "qdsweep/corpus.hpp"
#include "qdsweep/csv.hpp"
#include "qdsweep/decoding.hpp"
#include "qdsweep/metrics.hpp"
#include "qdsweep/model.hpp"
#include "qdsweep/sweep.hpp"
#include "qdsweep/training.hpp"

using namespace qds;

struct qds_vocab {
  std::shared_ptr<const corpus::Vocab> v;
};
struct qds_corpus {
  corpus::Corpus c;
};
struct qds_model {
  model::LstmLmParams p;
};
struct qds_disc {
  model::DiscriminatorParams d;
};
struct qds_trace {
  training::TrainTrace t;
};
struct qds_curve {
  sweep::SweepCurve c;
};

namespace {

thread_local std::string g_last_error;

template <class F>
qds_status guard(F&& f) {
  try {
    f();
    return QDS_OK;
  } catch (const RejectionError& e) {
    g_last_error = e.what();
    return QDS_REJECTION_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QDS_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return QDS_ERROR;
  }
}

qds_status fail(const char* message) {
  g_last_error = message;
  return QDS_ERROR;
}

training::TrainConfig to_cpp(const qds_train_config& c) {
  training::TrainConfig out;
  out.learning_rate = c.learning_rate;
  out.batch_size = c.batch_size;
  out.max_epochs = c.max_epochs;
  out.grad_clip_norm = c.grad_clip_norm;
  out.adam_beta1 = c.adam_beta1;
  out.adam_beta2 = c.adam_beta2;
  out.adam_eps = c.adam_eps;
  out.early_stop_patience = c.early_stop_patience;
  out.train_temperature = c.train_temperature;
  out.seed = c.seed;
  return out;
}

training::AdvConfig to_cpp(const qds_adv_config& c) {
  training::AdvConfig out;
  out.rollout_count = c.rollout_count;
  out.pretrain_epochs = c.pretrain_epochs;
  out.disc_steps_per_gen_step = c.disc_steps_per_gen_step;
  out.baseline_learning_rate = c.baseline_learning_rate;
  out.entropy_bonus_weight = c.entropy_bonus_weight;
  out.mle_interleave_ratio = c.mle_interleave_ratio;
  out.adv_steps = c.adv_steps;
  out.seed = c.seed;
  out.base = to_cpp(c.base);
  out.disc_learning_rate = c.disc_learning_rate;
  out.eval_every = c.eval_every;
  out.max_len = c.max_len;
  out.fixed_len = c.fixed_len;
  out.step_level_reward = c.step_level_reward != 0;
  out.collapse_window = c.collapse_window;
  return out;
}

decoding::DecoderConfig to_cpp(const qds_decoder_config& c) {
  decoding::DecoderConfig out;
  switch (c.strategy) {
    case QDS_STRATEGY_ANCESTRAL: out.strategy = decoding::Strategy::ancestral; break;
    case QDS_STRATEGY_GREEDY: out.strategy = decoding::Strategy::greedy; break;
    case QDS_STRATEGY_STOCHASTIC_BEAM: out.strategy = decoding::Strategy::stochastic_beam; break;
    case QDS_STRATEGY_GEN_REJECTION: out.strategy = decoding::Strategy::gen_rejection; break;
    case QDS_STRATEGY_DISC_REJECTION: out.strategy = decoding::Strategy::disc_rejection; break;
  }
  out.alpha = c.alpha;
  out.beam_size = c.beam_size;
  out.threshold = c.threshold;
  out.disc_threshold = c.disc_threshold;
  out.max_attempts = c.max_attempts;
  out.max_len = c.max_len;
  out.fixed_len = c.fixed_len;
  out.seed = c.seed;
  out.discriminator = c.discriminator ? &c.discriminator->d : nullptr;
  return out;
}

metrics::MetricConfig to_cpp(const qds_metric_config& c) {
  metrics::MetricConfig out;
  out.epsilon = c.epsilon;
  out.ref_cap = c.ref_cap;
  out.ref_cap_seed = c.ref_cap_seed;
  return out;
}

training::ProgressFn wrap_progress(qds_progress_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const training::TraceRecord& r) {
    qds_trace_record rec{r.step, r.phase.c_str(), r.train_nll, r.valid_nll, r.seconds};
    fn(&rec, user);
  };
}

csv::TimingMode timing_mode(int timing_off) {
  return timing_off ? csv::TimingMode::off : csv::TimingMode::wall;
}

}  // namespace

extern "C" {

const char* qds_version(void) { return "1.0.0"; }

const char* qds_last_error(void) { return g_last_error.c_str(); }

/* ---------------------------- vocabulary ---------------------------- */

qds_status qds_vocab_build_file(const char* text_path, int max_size, qds_vocab** out) {
  if (!text_path || !out) return fail("null argument");
  return guard([&] {
    auto lines = corpus::read_lines(text_path);
    *out = new qds_vocab{
        std::make_shared<corpus::Vocab>(corpus::build_vocab(lines, max_size))};
  });
}

qds_status qds_vocab_synthetic(int total_size, qds_vocab** out) {
  if (!out) return fail("null argument");
  return guard([&] {
    *out = new qds_vocab{
        std::make_shared<corpus::Vocab>(corpus::Vocab::synthetic(total_size))};
  });
}

qds_status qds_vocab_load(const char* path, qds_vocab** out) {
  if (!path || !out) return fail("null argument");
  return guard([&] {
    *out = new qds_vocab{std::make_shared<corpus::Vocab>(corpus::Vocab::load(path))};
  });
}

qds_status qds_vocab_save(const qds_vocab* v, const char* path) {
  if (!v || !path) return fail("null argument");
  return guard([&] { v->v->save(path); });
}

int qds_vocab_size(const qds_vocab* v) { return v ? v->v->size() : 0; }

void qds_vocab_free(qds_vocab* v) { delete v; }

/* ------------------------------ corpora ------------------------------ */

qds_status qds_corpus_load(const char* path, const qds_vocab* v, int max_len,
                           qds_corpus** out) {
  if (!path || !v || !out) return fail("null argument");
  return guard([&] { *out = new qds_corpus{corpus::load_corpus(path, v->v, max_len)}; });
}

qds_status qds_corpus_save(const qds_corpus* c, const char* path) {
  if (!c || !path) return fail("null argument");
  return guard([&] { corpus::save_corpus(c->c, path); });
}

int qds_corpus_size(const qds_corpus* c) { return c ? c->c.size() : 0; }

qds_status qds_corpus_split(const qds_corpus* c, double f_train, double f_valid,
                            double f_test, uint64_t seed, qds_corpus** train,
                            qds_corpus** valid, qds_corpus** test) {
  if (!c || !train || !valid || !test) return fail("null argument");
  return guard([&] {
    auto parts = corpus::split_corpus(c->c, f_train, f_valid, f_test, seed);
    *train = new qds_corpus{std::move(parts[0])};
    *valid = new qds_corpus{std::move(parts[1])};
    *test = new qds_corpus{std::move(parts[2])};
  });
}

void qds_corpus_free(qds_corpus* c) { delete c; }

/* ------------------------------ models ------------------------------ */

qds_status qds_model_init(int vocab_size, int embed_dim, int hidden_dim, uint64_t seed,
                          double scale, qds_model** out) {
  if (!out) return fail("null argument");
  return guard([&] {
    *out = new qds_model{model::init_params({vocab_size, embed_dim, hidden_dim}, seed, scale)};
  });
}

qds_status qds_model_oracle(int vocab_size, uint64_t seed, qds_model** out) {
  if (!out) return fail("null argument");
  return guard([&] { *out = new qds_model{model::make_oracle(vocab_size, seed)}; });
}

qds_status qds_model_load(const char* path, qds_model** out) {
  if (!path || !out) return fail("null argument");
  return guard([&] { *out = new qds_model{model::load_params(path)}; });
}

qds_status qds_model_save(const qds_model* m, const char* path) {
  if (!m || !path) return fail("null argument");
  return guard([&] { model::save_params(m->p, path); });
}

int qds_model_vocab_size(const qds_model* m) { return m ? m->p.dims.vocab_size : 0; }

int qds_model_is_oracle(const qds_model* m) { return m && m->p.oracle ? 1 : 0; }

void qds_model_free(qds_model* m) { delete m; }

qds_status qds_disc_init(int vocab_size, int embed_dim, int hidden_dim, uint64_t seed,
                         double scale, qds_disc** out) {
  if (!out) return fail("null argument");
  return guard([&] {
    *out = new qds_disc{
        model::init_discriminator({vocab_size, embed_dim, hidden_dim}, seed, scale)};
  });
}

qds_status qds_disc_load(const char* path, qds_disc** out) {
  if (!path || !out) return fail("null argument");
  return guard([&] { *out = new qds_disc{model::load_discriminator(path)}; });
}

qds_status qds_disc_save(const qds_disc* d, const char* path) {
  if (!d || !path) return fail("null argument");
  return guard([&] { model::save_discriminator(d->d, path); });
}

void qds_disc_free(qds_disc* d) { delete d; }

qds_status qds_discriminate(const qds_disc* d, const qds_corpus* c, int index, double* out) {
  if (!d || !c || !out) return fail("null argument");
  return guard([&] {
    if (index < 0 || index >= c->c.size()) throw Error("discriminate: index out of range");
    *out = model::discriminate(d->d, c->c.sentences[index]);
  });
}

/* --------------------------- configuration --------------------------- */

void qds_train_config_defaults(qds_train_config* cfg) {
  if (!cfg) return;
  const training::TrainConfig d;
  *cfg = {d.learning_rate, d.batch_size,          d.max_epochs, d.grad_clip_norm,
          d.adam_beta1,    d.adam_beta2,          d.adam_eps,   d.early_stop_patience,
          d.train_temperature, d.seed};
}

void qds_adv_config_defaults(qds_adv_config* cfg) {
  if (!cfg) return;
  const training::AdvConfig d;
  std::memset(cfg, 0, sizeof *cfg);
  cfg->rollout_count = d.rollout_count;
  cfg->pretrain_epochs = d.pretrain_epochs;
  cfg->disc_steps_per_gen_step = d.disc_steps_per_gen_step;
  cfg->baseline_learning_rate = d.baseline_learning_rate;
  cfg->entropy_bonus_weight = d.entropy_bonus_weight;
  cfg->mle_interleave_ratio = d.mle_interleave_ratio;
  cfg->adv_steps = d.adv_steps;
  cfg->seed = d.seed;
  qds_train_config_defaults(&cfg->base);
  cfg->disc_learning_rate = d.disc_learning_rate;
  cfg->eval_every = d.eval_every;
  cfg->max_len = d.max_len;
  cfg->fixed_len = d.fixed_len;
  cfg->step_level_reward = d.step_level_reward ? 1 : 0;
  cfg->collapse_window = d.collapse_window;
}

void qds_decoder_config_defaults(qds_decoder_config* cfg) {
  if (!cfg) return;
  const decoding::DecoderConfig d;
  std::memset(cfg, 0, sizeof *cfg);
  cfg->strategy = QDS_STRATEGY_ANCESTRAL;
  cfg->alpha = d.alpha;
  cfg->beam_size = d.beam_size;
  cfg->threshold = d.threshold;
  cfg->disc_threshold = d.disc_threshold;
  cfg->max_attempts = d.max_attempts;
  cfg->max_len = d.max_len;
  cfg->fixed_len = d.fixed_len;
  cfg->seed = d.seed;
  cfg->discriminator = nullptr;
}

void qds_metric_config_defaults(qds_metric_config* cfg) {
  if (!cfg) return;
  const metrics::MetricConfig d;
  *cfg = {d.epsilon, d.ref_cap, d.ref_cap_seed};
}

/* ------------------------------ training ----------------------------- */

qds_status qds_train_mle(qds_model* m, const qds_corpus* train, const qds_corpus* valid,
                         const qds_train_config* cfg, qds_progress_fn progress, void* user,
                         qds_trace** trace_out) {
  if (!m || !train || !valid || !cfg) return fail("null argument");
  return guard([&] {
    auto [trained, trace] = training::mle_train(m->p, train->c, valid->c, to_cpp(*cfg),
                                                wrap_progress(progress, user));
    m->p = std::move(trained);
    if (trace_out) *trace_out = new qds_trace{std::move(trace)};
  });
}

qds_status qds_train_adversarial(qds_model* m, qds_disc* d, const qds_corpus* train,
                                 const qds_corpus* valid, const qds_adv_config* cfg,
                                 qds_progress_fn progress, void* user, qds_trace** trace_out) {
  if (!m || !d || !train || !valid || !cfg) return fail("null argument");
  return guard([&] {
    auto result = training::adversarial_train(m->p, d->d, train->c, valid->c, to_cpp(*cfg),
                                              wrap_progress(progress, user));
    m->p = std::move(result.gen);
    d->d = std::move(result.disc);
    if (trace_out) *trace_out = new qds_trace{std::move(result.trace)};
  });
}

qds_status qds_train_discriminator_only(const qds_model* gen, const qds_corpus* real_data,
                                        const qds_adv_config* cfg, qds_disc** out) {
  if (!gen || !real_data || !cfg || !out) return fail("null argument");
  return guard([&] {
    *out = new qds_disc{training::train_discriminator_only(gen->p, real_data->c, to_cpp(*cfg))};
  });
}

qds_status qds_evaluate_nll(const qds_model* m, const qds_corpus* c, double* out) {
  if (!m || !c || !out) return fail("null argument");
  return guard([&] { *out = training::evaluate_nll(m->p, c->c); });
}

qds_status qds_gradient_check(const qds_model* m, const qds_corpus* sentences,
                              int n_sentences, double tolerance, double fd_step,
                              const char* csv_path, double* max_rel_err_out, int* pass_out) {
  if (!m || !sentences) return fail("null argument");
  return guard([&] {
    if (n_sentences < 1 || n_sentences > sentences->c.size())
      throw Error("gradient_check: bad sentence count");
    training::GradCheckReport merged;
    merged.tolerance = tolerance;
    merged.fd_step = fd_step;
    for (int i = 0; i < n_sentences; ++i) {
      const auto rep =
          training::gradient_check(m->p, sentences->c.sentences[i], tolerance, fd_step);
      if (merged.blocks.empty()) {
        merged.blocks = rep.blocks;
      } else {
        for (std::size_t b = 0; b < rep.blocks.size(); ++b)
          merged.blocks[b].max_rel_err =
              std::max(merged.blocks[b].max_rel_err, rep.blocks[b].max_rel_err);
      }
      merged.max_rel_err = std::max(merged.max_rel_err, rep.max_rel_err);
    }
    merged.pass = merged.max_rel_err < tolerance;
    if (csv_path) sweep::write_gradcheck_csv(merged, csv_path);
    if (max_rel_err_out) *max_rel_err_out = merged.max_rel_err;
    if (pass_out) *pass_out = merged.pass ? 1 : 0;
  });
}

long qds_trace_size(const qds_trace* t) {
  return t ? static_cast<long>(t->t.records.size()) : 0;
}

qds_status qds_trace_record_at(const qds_trace* t, long i, qds_trace_record* out) {
  if (!t || !out) return fail("null argument");
  if (i < 0 || i >= qds_trace_size(t)) return fail("trace index out of range");
  const auto& r = t->t.records[i];
  *out = {r.step, r.phase.c_str(), r.train_nll, r.valid_nll, r.seconds};
  return QDS_OK;
}

long qds_trace_phase_switch_step(const qds_trace* t) {
  return t ? t->t.phase_switch_step : -1;
}

long qds_trace_warning_count(const qds_trace* t) {
  return t ? static_cast<long>(t->t.warnings.size()) : 0;
}

const char* qds_trace_warning(const qds_trace* t, long i) {
  if (!t || i < 0 || i >= qds_trace_warning_count(t)) return nullptr;
  return t->t.warnings[i].c_str();
}

qds_status qds_trace_write_csv(const qds_trace* t, const char* path, int timing_off) {
  if (!t || !path) return fail("null argument");
  return guard([&] { sweep::write_trace_csv(t->t, path, timing_mode(timing_off)); });
}

void qds_trace_free(qds_trace* t) { delete t; }

/* ------------------------------ decoding ----------------------------- */

qds_status qds_sample(const qds_model* m, const qds_vocab* v, const qds_decoder_config* cfg,
                      int n, qds_corpus** out, qds_sample_stats* stats) {
  if (!m || !v || !cfg || !out) return fail("null argument");
  return guard([&] {
    auto batch = decoding::sample(m->p, to_cpp(*cfg), n);
    if (stats) {
      stats->attempts = batch.attempts_used;
      stats->elapsed_seconds = batch.elapsed_seconds;
      stats->acceptance_rate = batch.acceptance_rate();
      stats->mean_loglik = batch.mean_loglik();
    }
    corpus::Corpus c;
    c.vocab = v->v;
    c.split = corpus::Split::generated;
    c.sentences = std::move(batch.sentences);
    *out = new qds_corpus{std::move(c)};
  });
}

qds_status qds_sample_local_beam(const qds_model* m, const qds_vocab* v, int beam_size,
                                 int max_len, int fixed_len, qds_corpus** out) {
  if (!m || !v || !out) return fail("null argument");
  return guard([&] {
    corpus::Corpus c;
    c.vocab = v->v;
    c.split = corpus::Split::generated;
    c.sentences.push_back(decoding::local_beam(m->p, beam_size, max_len, fixed_len));
    *out = new qds_corpus{std::move(c)};
  });
}

/* ------------------------------ metrics ------------------------------ */

qds_status qds_bleu(const qds_corpus* hyp, const qds_corpus* refs, int n,
                    const qds_metric_config* cfg, double* out) {
  if (!hyp || !refs || !out) return fail("null argument");
  return guard([&] {
    const metrics::MetricConfig mc = cfg ? to_cpp(*cfg) : metrics::MetricConfig{};
    *out = metrics::bleu_n(hyp->c, refs->c, n, mc);
  });
}

qds_status qds_self_bleu(const qds_corpus* c, int n, const qds_metric_config* cfg,
                         double* out) {
  if (!c || !out) return fail("null argument");
  return guard([&] {
    const metrics::MetricConfig mc = cfg ? to_cpp(*cfg) : metrics::MetricConfig{};
    *out = metrics::self_bleu_n(c->c, n, mc);
  });
}

qds_status qds_nll_under_model(const qds_model* scorer, const qds_corpus* c, double alpha,
                               double* out) {
  if (!scorer || !c || !out) return fail("null argument");
  return guard([&] { *out = metrics::nll_under_model(scorer->p, c->c, alpha); });
}

qds_status qds_lm_score(const qds_corpus* real_train, const qds_corpus* real_valid,
                        const qds_corpus* generated, const qds_train_config* cfg,
                        double* out) {
  if (!real_train || !real_valid || !generated || !cfg || !out) return fail("null argument");
  return guard([&] {
    *out = metrics::lm_score(real_train->c, real_valid->c, generated->c, to_cpp(*cfg));
  });
}

qds_status qds_reverse_lm_score(const qds_corpus* generated, const qds_corpus* real_test,
                                const qds_train_config* cfg, double* out) {
  if (!generated || !real_test || !cfg || !out) return fail("null argument");
  return guard([&] {
    *out = metrics::reverse_lm_score(generated->c, real_test->c, to_cpp(*cfg));
  });
}

qds_status qds_unigram_nll(const qds_corpus* train, const qds_corpus* test, double* out) {
  if (!train || !test || !out) return fail("null argument");
  return guard([&] { *out = metrics::unigram_nll(train->c, test->c); });
}

qds_status qds_write_eval_csv(const qds_metric_report* rows, int n_rows, const char* path) {
  if (!rows || !path) return fail("null argument");
  return guard([&] {
    std::vector<metrics::MetricReport> reports;
    for (int i = 0; i < n_rows; ++i) {
      metrics::MetricReport r;
      r.metric = rows[i].metric ? rows[i].metric : "";
      r.n = rows[i].n;
      r.value = rows[i].value;
      r.sample_count = rows[i].samples;
      r.reference_count = rows[i].references;
      r.epsilon = rows[i].epsilon;
      r.seed = rows[i].seed;
      reports.push_back(std::move(r));
    }
    sweep::write_eval_csv(reports, path);
  });
}

/* ------------------------------- sweeps ------------------------------ */

void qds_sweep_spec_defaults(qds_sweep_spec* spec) {
  if (!spec) return;
  std::memset(spec, 0, sizeof *spec);
  const sweep::SweepSpec d;
  spec->control = QDS_CONTROL_TEMPERATURE;
  spec->metric_pair = QDS_PAIR_BLEU_SBLEU;
  spec->samples_per_point = d.samples_per_point;
  spec->bleu_n = d.bleu_n;
  spec->max_len = d.max_len;
  spec->fixed_len = d.fixed_len;
  spec->max_attempts = d.max_attempts;
  qds_metric_config_defaults(&spec->metric_cfg);
  qds_train_config_defaults(&spec->lm_cfg);
  spec->diversity_ceiling = std::nan("");
  spec->apply_unigram_floor = 1;
}

qds_status qds_run_sweep(const qds_model* m, const qds_sweep_spec* spec,
                         const char* model_id, qds_curve** out) {
  if (!m || !spec || !out) return fail("null argument");
  return guard([&] {
    sweep::SweepSpec s;
    switch (spec->control) {
      case QDS_CONTROL_TEMPERATURE: s.control = sweep::ControlKind::temperature; break;
      case QDS_CONTROL_BEAM_SIZE: s.control = sweep::ControlKind::beam_size; break;
      case QDS_CONTROL_GEN_THRESHOLD: s.control = sweep::ControlKind::gen_threshold; break;
      case QDS_CONTROL_DISC_THRESHOLD: s.control = sweep::ControlKind::disc_threshold; break;
    }
    switch (spec->metric_pair) {
      case QDS_PAIR_BLEU_SBLEU: s.metric_pair = sweep::MetricPair::bleu_sbleu; break;
      case QDS_PAIR_LM_RLM: s.metric_pair = sweep::MetricPair::lm_rlm; break;
      case QDS_PAIR_ORACLE_NLL: s.metric_pair = sweep::MetricPair::oracle_nll; break;
    }
    s.control_values.assign(spec->control_values,
                            spec->control_values + spec->n_control_values);
    s.samples_per_point = spec->samples_per_point;
    if (spec->seeds && spec->n_seeds > 0)
      s.seeds.assign(spec->seeds, spec->seeds + spec->n_seeds);
    s.bleu_n = spec->bleu_n;
    s.max_len = spec->max_len;
    s.fixed_len = spec->fixed_len;
    s.max_attempts = spec->max_attempts;
    s.metric_cfg = to_cpp(spec->metric_cfg);
    s.lm_cfg = to_cpp(spec->lm_cfg);
    s.references = spec->references ? &spec->references->c : nullptr;
    s.real_train = spec->real_train ? &spec->real_train->c : nullptr;
    s.real_valid = spec->real_valid ? &spec->real_valid->c : nullptr;
    s.real_test = spec->real_test ? &spec->real_test->c : nullptr;
    s.oracle = spec->oracle ? &spec->oracle->p : nullptr;
    s.disc = spec->discriminator ? &spec->discriminator->d : nullptr;
    s.diversity_ceiling = spec->diversity_ceiling;
    s.apply_unigram_floor = spec->apply_unigram_floor != 0;
    *out = new qds_curve{sweep::run_sweep(m->p, s, model_id ? model_id : "model")};
  });
}

long qds_curve_size(const qds_curve* c) {
  return c ? static_cast<long>(c->c.points.size()) : 0;
}

qds_status qds_curve_point_at(const qds_curve* c, long i, qds_sweep_point* out) {
  if (!c || !out) return fail("null argument");
  if (i < 0 || i >= qds_curve_size(c)) return fail("curve index out of range");
  const auto& p = c->c.points[i];
  *out = {p.control,      p.quality, p.diversity, p.quality_se, p.diversity_se,
          p.seconds,      p.samples, p.seed,      p.flag.c_str()};
  return QDS_OK;
}

qds_status qds_curve_write_csv(const qds_curve* c, const char* path, int timing_off) {
  if (!c || !path) return fail("null argument");
  return guard([&] { sweep::write_curve_csv(c->c, path, timing_mode(timing_off)); });
}

qds_status qds_curve_load_csv(const char* path, qds_curve** out) {
  if (!path || !out) return fail("null argument");
  return guard([&] { *out = new qds_curve{sweep::read_curve_csv(path)}; });
}

qds_status qds_curve_auc(const qds_curve* c, double diversity_lo, double diversity_hi,
                         double* out) {
  if (!c || !out) return fail("null argument");
  return guard([&] { *out = sweep::auc(c->c, diversity_lo, diversity_hi); });
}

void qds_curve_free(qds_curve* c) { delete c; }

qds_status qds_bench(const qds_model* m, const qds_decoder_config* strategies,
                     int n_strategies, int n_sentences, const char* csv_path,
                     int timing_off) {
  if (!m || !strategies || !csv_path) return fail("null argument");
  return guard([&] {
    std::vector<decoding::DecoderConfig> cfgs;
    for (int i = 0; i < n_strategies; ++i) cfgs.push_back(to_cpp(strategies[i]));
    const auto rows = sweep::bench_decoding(m->p, cfgs, n_sentences);
    sweep::write_bench_csv(rows, csv_path, timing_mode(timing_off));
  });
}

qds_status qds_entropy_trace(const qds_model* init, const qds_corpus* train,
                             const qds_corpus* valid, const qds_train_config* mle_cfg,
                             const qds_adv_config* adv_cfg, qds_progress_fn progress,
                             void* user, const char* csv_path, int timing_off) {
  if (!init || !train || !valid || !mle_cfg || !adv_cfg || !csv_path)
    return fail("null argument");
  return guard([&] {
    const auto trace = sweep::entropy_drop_trace(init->p, train->c, valid->c, to_cpp(*mle_cfg),
                                                 to_cpp(*adv_cfg),
                                                 wrap_progress(progress, user));
    sweep::write_trace_csv(trace, csv_path, timing_mode(timing_off));
  });
}

qds_status qds_train_temp_study(const double* alpha_trains, int n_alphas, int embed_dim,
                                int hidden_dim, const qds_corpus* train,
                                const qds_corpus* valid, const qds_corpus* references,
                                const qds_train_config* base, int bleu_n, int samples,
                                int max_len, int fixed_len, const char* csv_path) {
  if (!alpha_trains || !train || !valid || !references || !base || !csv_path)
    return fail("null argument");
  return guard([&] {
    if (!train->c.vocab) throw Error("train corpus has no vocab");
    const std::vector<double> alphas(alpha_trains, alpha_trains + n_alphas);
    const model::Dims dims{train->c.vocab->size(), embed_dim, hidden_dim};
    const auto rows = sweep::train_temp_study(alphas, dims, train->c, valid->c, references->c,
                                              to_cpp(*base), bleu_n, samples, max_len,
                                              fixed_len);
    sweep::write_temp_study_csv(rows, csv_path);
  });
}

void qds_synth_config_defaults(qds_synth_config* cfg) {
  if (!cfg) return;
  std::memset(cfg, 0, sizeof *cfg);
  const sweep::SyntheticConfig d;
  cfg->oracle_vocab = d.oracle_vocab;
  cfg->oracle_seed = d.oracle_seed;
  cfg->seq_len = d.seq_len;
  cfg->n_train = d.n_train;
  cfg->n_valid = d.n_valid;
  cfg->n_test = d.n_test;
  cfg->student_embed = d.student_dims.embed_dim;
  cfg->student_hidden = d.student_dims.hidden_dim;
  qds_train_config_defaults(&cfg->mle);
  qds_adv_config_defaults(&cfg->adv);
  cfg->table1_samples = d.table1_samples;
  cfg->samples_per_point = d.samples_per_point;
  cfg->run_adversarial = d.run_adversarial ? 1 : 0;
}

qds_status qds_synthetic_experiment(const qds_synth_config* cfg, const char* out_dir,
                                    int timing_off, qds_progress_fn progress, void* user) {
  if (!cfg || !out_dir) return fail("null argument");
  return guard([&] {
    sweep::SyntheticConfig s;
    s.oracle_vocab = cfg->oracle_vocab;
    s.oracle_seed = cfg->oracle_seed;
    s.seq_len = cfg->seq_len;
    s.n_train = cfg->n_train;
    s.n_valid = cfg->n_valid;
    s.n_test = cfg->n_test;
    s.student_dims = {cfg->oracle_vocab, cfg->student_embed, cfg->student_hidden};
    s.mle = to_cpp(cfg->mle);
    s.adv = to_cpp(cfg->adv);
    if (cfg->alpha_grid && cfg->n_alpha > 0)
      s.alpha_grid.assign(cfg->alpha_grid, cfg->alpha_grid + cfg->n_alpha);
    if (cfg->table1_alphas && cfg->n_table1 > 0)
      s.table1_alphas.assign(cfg->table1_alphas, cfg->table1_alphas + cfg->n_table1);
    s.table1_samples = cfg->table1_samples;
    s.samples_per_point = cfg->samples_per_point;
    if (cfg->seeds && cfg->n_seeds > 0) s.seeds.assign(cfg->seeds, cfg->seeds + cfg->n_seeds);
    s.run_adversarial = cfg->run_adversarial != 0;
    sweep::run_synthetic_experiment(s, out_dir, timing_mode(timing_off),
                                    wrap_progress(progress, user));
  });
}

} /* extern "C" */
