// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include "qdsweep/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "qdsweep/decoding.hpp"
#include "qdsweep/rng.hpp"

namespace qds::training {

using model::DiscriminatorParams;
using model::LstmLmParams;
using model::detail::StepCache;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Flat views over parameter/gradient blocks. Parameters and their gradient
// mirrors share block order, so zipped iteration is safe.
// ---------------------------------------------------------------------------

using FlatBlocks = std::vector<Eigen::Map<Eigen::ArrayXd>>;

template <class P>
FlatBlocks flat_lm(P& p) {
  FlatBlocks out;
  model::visit_blocks(p, [&](const char*, auto& b) {
    out.emplace_back(b.data(), b.size());
  });
  return out;
}

template <class P>
FlatBlocks flat_disc(P& p) {
  FlatBlocks out;
  model::visit_disc_blocks(p, [&](const char*, auto& b) {
    out.emplace_back(b.data(), b.size());
  });
  return out;
}

double global_norm(const FlatBlocks& blocks) {
  double sq = 0.0;
  for (const auto& b : blocks) sq += (b * b).sum();
  return std::sqrt(sq);
}

void scale_blocks(FlatBlocks& blocks, double s) {
  for (auto& b : blocks) b *= s;
}

void zero_blocks(FlatBlocks& blocks) {
  for (auto& b : blocks) b.setZero();
}

void check_finite(const FlatBlocks& blocks, const char* what, long step) {
  for (const auto& b : blocks)
    if (!b.isFinite().all())
      throw Error(std::string("divergence (NaN loss) in ") + what + " at step " +
                  std::to_string(step));
}

/// Adam over flat block views; state arrays are allocated on first step.
class Adam {
 public:
  void step(FlatBlocks& params, const FlatBlocks& grads, double lr, double b1, double b2,
            double eps) {
    if (m_.empty()) {
      for (const auto& g : grads) {
        m_.emplace_back(Eigen::ArrayXd::Zero(g.size()));
        v_.emplace_back(Eigen::ArrayXd::Zero(g.size()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
      v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i].square();
      params[i] -= lr * (m_[i] / c1) / ((v_[i] / c2).sqrt() + eps);
    }
  }

 private:
  std::vector<Eigen::ArrayXd> m_, v_;
  long t_ = 0;
};

void clip_gradients(FlatBlocks& grads, double clip_norm) {
  if (clip_norm <= 0.0) return;
  const double norm = global_norm(grads);
  if (norm > clip_norm) scale_blocks(grads, clip_norm / norm);
}

// ---------------------------------------------------------------------------
// Teacher-forced forward/backward
// ---------------------------------------------------------------------------

struct ForwardTrace {
  std::vector<StepCache> caches;
  std::vector<Eigen::VectorXd> pre_logits;  // o_t per step
  std::vector<Eigen::VectorXd> logits;      // embedding * o_t per step
};

ForwardTrace forward_teacher(const LstmLmParams& p, const corpus::Sentence& s) {
  if (s.ids.size() < 2 || s.ids.back() != corpus::kEos)
    throw Error("train: malformed sentence");
  ForwardTrace tr;
  const std::size_t n = s.ids.size();
  tr.caches.reserve(n);
  tr.pre_logits.reserve(n);
  tr.logits.reserve(n);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(p.dims.hidden_dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p.dims.hidden_dim);
  int input = corpus::kBos;
  for (std::size_t t = 0; t < n; ++t) {
    tr.caches.push_back(model::detail::lstm_step(p, h, c, input));
    h = tr.caches.back().h;
    c = tr.caches.back().c;
    tr.pre_logits.push_back(model::detail::pre_logit(p, h));
    tr.logits.push_back(p.embedding * tr.pre_logits.back());
    input = s.ids[t];
  }
  return tr;
}

/// Backpropagates per-step logit gradients through the unrolled LSTM,
/// accumulating into `acc`. `tokens[t]` is the input consumed at step t.
void lm_backward(const LstmLmParams& p, const ForwardTrace& tr,
                 const std::vector<Eigen::VectorXd>& dlogits, LmGradients& acc) {
  const int hidden = p.dims.hidden_dim;
  const int embed = p.dims.embed_dim;
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden);
  for (int t = static_cast<int>(tr.caches.size()) - 1; t >= 0; --t) {
    const StepCache& cache = tr.caches[t];
    Eigen::VectorXd dh;
    if (dlogits[t].size() != 0) {
      acc.embedding.noalias() += dlogits[t] * tr.pre_logits[t].transpose();
      Eigen::VectorXd dout = p.embedding.transpose() * dlogits[t];
      if (p.has_proj()) {
        acc.proj.noalias() += dout * cache.h.transpose();
        acc.b_proj += dout;
        dh = p.proj.transpose() * dout;
      } else {
        dh = dout;
      }
    } else {
      dh = Eigen::VectorXd::Zero(hidden);
    }
    dh += dh_next;
    Eigen::VectorXd dc = dc_next;

    const Eigen::ArrayXd tanh_c = cache.tanh_c.array();
    const Eigen::ArrayXd dgo = dh.array() * tanh_c;
    dc.array() += dh.array() * cache.go.array() * (1.0 - tanh_c.square());
    const Eigen::ArrayXd dgi = dc.array() * cache.gc.array();
    const Eigen::ArrayXd dgc = dc.array() * cache.gi.array();
    const Eigen::ArrayXd dgf = dc.array() * cache.c_prev.array();
    dc_next = (dc.array() * cache.gf.array()).matrix();

    const Eigen::VectorXd da_i = (dgi * cache.gi.array() * (1.0 - cache.gi.array())).matrix();
    const Eigen::VectorXd da_f = (dgf * cache.gf.array() * (1.0 - cache.gf.array())).matrix();
    const Eigen::VectorXd da_c = (dgc * (1.0 - cache.gc.array().square())).matrix();
    const Eigen::VectorXd da_o = (dgo * cache.go.array() * (1.0 - cache.go.array())).matrix();

    acc.w_in.noalias() += da_i * cache.z.transpose();
    acc.w_forget.noalias() += da_f * cache.z.transpose();
    acc.w_cell.noalias() += da_c * cache.z.transpose();
    acc.w_out.noalias() += da_o * cache.z.transpose();
    acc.b_in += da_i;
    acc.b_forget += da_f;
    acc.b_cell += da_c;
    acc.b_out += da_o;

    Eigen::VectorXd dz = p.w_in.transpose() * da_i;
    dz.noalias() += p.w_forget.transpose() * da_f;
    dz.noalias() += p.w_cell.transpose() * da_c;
    dz.noalias() += p.w_out.transpose() * da_o;

    acc.embedding.row(cache.token) += dz.head(embed).transpose();
    dh_next = dz.tail(hidden);
  }
}

/// Cross-entropy logit gradients for one teacher-forced sentence, scaled by
/// 1 / (alpha * total_tokens).
std::vector<Eigen::VectorXd> nll_dlogits(const ForwardTrace& tr, const corpus::Sentence& s,
                                         double alpha, double total_tokens, double* nll_out) {
  std::vector<Eigen::VectorXd> dlogits(tr.logits.size());
  double nll = 0.0;
  for (std::size_t t = 0; t < tr.logits.size(); ++t) {
    const Eigen::VectorXd logp = model::log_conditional(tr.logits[t], alpha);
    nll -= logp(s.ids[t]);
    Eigen::VectorXd d = logp.array().exp();
    d(s.ids[t]) -= 1.0;
    dlogits[t] = d / (alpha * total_tokens);
  }
  if (nll_out) *nll_out = nll;
  return dlogits;
}

// ---------------------------------------------------------------------------
// Discriminator forward/backward
// ---------------------------------------------------------------------------

std::vector<StepCache> disc_forward(const DiscriminatorParams& d, const corpus::Sentence& s) {
  std::vector<StepCache> caches;
  caches.reserve(s.ids.size() + 1);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(d.dims.hidden_dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d.dims.hidden_dim);
  auto feed = [&](int token) {
    caches.push_back(model::detail::lstm_step(d, h, c, token));
    h = caches.back().h;
    c = caches.back().c;
  };
  feed(corpus::kBos);
  for (int id : s.ids) feed(id);
  return caches;
}

double disc_score_from_caches(const DiscriminatorParams& d,
                              const std::vector<StepCache>& caches) {
  const double s = d.head_w.dot(caches.back().h) + d.head_b(0);
  return 1.0 / (1.0 + std::exp(-s));
}

/// Backward for the scalar head; `dscore` is dLoss/d(pre-sigmoid score).
void disc_backward(const DiscriminatorParams& d, const std::vector<StepCache>& caches,
                   double dscore, DiscGradients& acc) {
  const int hidden = d.dims.hidden_dim;
  const int embed = d.dims.embed_dim;
  acc.head_w += dscore * caches.back().h;
  acc.head_b(0) += dscore;
  Eigen::VectorXd dh_next = dscore * d.head_w;
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden);
  for (int t = static_cast<int>(caches.size()) - 1; t >= 0; --t) {
    const StepCache& cache = caches[t];
    Eigen::VectorXd dh = dh_next;
    Eigen::VectorXd dc = dc_next;

    const Eigen::ArrayXd tanh_c = cache.tanh_c.array();
    const Eigen::ArrayXd dgo = dh.array() * tanh_c;
    dc.array() += dh.array() * cache.go.array() * (1.0 - tanh_c.square());
    const Eigen::ArrayXd dgi = dc.array() * cache.gc.array();
    const Eigen::ArrayXd dgc = dc.array() * cache.gi.array();
    const Eigen::ArrayXd dgf = dc.array() * cache.c_prev.array();
    dc_next = (dc.array() * cache.gf.array()).matrix();

    const Eigen::VectorXd da_i = (dgi * cache.gi.array() * (1.0 - cache.gi.array())).matrix();
    const Eigen::VectorXd da_f = (dgf * cache.gf.array() * (1.0 - cache.gf.array())).matrix();
    const Eigen::VectorXd da_c = (dgc * (1.0 - cache.gc.array().square())).matrix();
    const Eigen::VectorXd da_o = (dgo * cache.go.array() * (1.0 - cache.go.array())).matrix();

    acc.w_in.noalias() += da_i * cache.z.transpose();
    acc.w_forget.noalias() += da_f * cache.z.transpose();
    acc.w_cell.noalias() += da_c * cache.z.transpose();
    acc.w_out.noalias() += da_o * cache.z.transpose();
    acc.b_in += da_i;
    acc.b_forget += da_f;
    acc.b_cell += da_c;
    acc.b_out += da_o;

    Eigen::VectorXd dz = d.w_in.transpose() * da_i;
    dz.noalias() += d.w_forget.transpose() * da_f;
    dz.noalias() += d.w_cell.transpose() * da_c;
    dz.noalias() += d.w_out.transpose() * da_o;

    acc.embedding.row(cache.token) += dz.head(embed).transpose();
    dh_next = dz.tail(hidden);
  }
}

// ---------------------------------------------------------------------------
// Free-running generation with caches (for REINFORCE)
// ---------------------------------------------------------------------------

struct FreeStep {
  StepCache cache;
  Eigen::VectorXd pre_logit;
  Eigen::VectorXd logits;
  int token = -1;
  bool sampled = false;
  bool allow_eos = false;
};

struct FreeTrace {
  std::vector<FreeStep> steps;
  corpus::Sentence sentence;
};

FreeTrace free_forward(const LstmLmParams& p, int max_len, int fixed_len, RandomStream& rs) {
  FreeTrace tr;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(p.dims.hidden_dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p.dims.hidden_dim);
  int input = corpus::kBos;
  int content = 0;
  for (;;) {
    FreeStep st;
    st.cache = model::detail::lstm_step(p, h, c, input);
    h = st.cache.h;
    c = st.cache.c;
    st.pre_logit = model::detail::pre_logit(p, h);
    st.logits = p.embedding * st.pre_logit;
    if (decoding::sampling_force_eos(content, max_len, fixed_len)) {
      st.token = corpus::kEos;
      st.sampled = false;
    } else {
      st.allow_eos = decoding::sampling_allow_eos(content, max_len, fixed_len);
      Eigen::VectorXd masked = st.logits;
      model::apply_sample_mask(masked, st.allow_eos);
      const Eigen::VectorXd probs = model::conditional_dist(masked, 1.0);
      st.token = rs.categorical({probs.data(), static_cast<std::size_t>(probs.size())});
      st.sampled = true;
    }
    const int tok = st.token;
    tr.sentence.ids.push_back(tok);
    tr.steps.push_back(std::move(st));
    if (tok == corpus::kEos) break;
    ++content;
    input = tok;
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Shared discriminator-update step (adversarial_train and
// train_discriminator_only).
// ---------------------------------------------------------------------------

struct DiscUpdateResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

DiscUpdateResult disc_update(DiscriminatorParams& disc, Adam& opt, const LstmLmParams& gen,
                             const corpus::Corpus& real, const AdvConfig& cfg,
                             RandomStream& rs, std::uint64_t sample_seed) {
  const int batch = std::max(1, cfg.base.batch_size);
  DiscGradients grads = DiscGradients::zero_like(disc);
  FlatBlocks gflat = flat_disc(grads);
  double loss = 0.0;
  int correct = 0;
  const double scale = 1.0 / (2.0 * batch);
  for (int b = 0; b < 2 * batch; ++b) {
    const bool is_real = b < batch;
    corpus::Sentence sent;
    if (is_real) {
      sent = real.sentences[static_cast<std::size_t>(rs.below(real.sentences.size()))];
    } else {
      RandomStream gs(mix_seed(sample_seed, 0xFA4EULL, static_cast<std::uint64_t>(b)));
      sent = decoding::sample_one(gen, 1.0, cfg.max_len, cfg.fixed_len, gs);
    }
    const auto caches = disc_forward(disc, sent);
    const double score = disc_score_from_caches(disc, caches);
    const double y = is_real ? 1.0 : 0.0;
    loss -= (y * std::log(std::max(score, 1e-300)) +
             (1.0 - y) * std::log(std::max(1.0 - score, 1e-300)));
    if ((score > 0.5) == is_real) ++correct;
    disc_backward(disc, caches, (score - y) * scale, grads);
  }
  clip_gradients(gflat, cfg.base.grad_clip_norm);
  FlatBlocks pflat = flat_disc(disc);
  opt.step(pflat, gflat, cfg.disc_learning_rate, cfg.base.adam_beta1, cfg.base.adam_beta2,
           cfg.base.adam_eps);
  return {loss / (2.0 * batch), static_cast<double>(correct) / (2.0 * batch)};
}

}  // namespace

// ---------------------------------------------------------------------------

LmGradients LmGradients::zero_like(const LstmLmParams& p) {
  LmGradients g;
  g.dims = p.dims;
  g.with_proj = p.has_proj();
  g.embedding = Eigen::MatrixXd::Zero(p.embedding.rows(), p.embedding.cols());
  g.w_in = Eigen::MatrixXd::Zero(p.w_in.rows(), p.w_in.cols());
  g.w_forget = Eigen::MatrixXd::Zero(p.w_forget.rows(), p.w_forget.cols());
  g.w_cell = Eigen::MatrixXd::Zero(p.w_cell.rows(), p.w_cell.cols());
  g.w_out = Eigen::MatrixXd::Zero(p.w_out.rows(), p.w_out.cols());
  g.b_in = Eigen::VectorXd::Zero(p.b_in.size());
  g.b_forget = Eigen::VectorXd::Zero(p.b_forget.size());
  g.b_cell = Eigen::VectorXd::Zero(p.b_cell.size());
  g.b_out = Eigen::VectorXd::Zero(p.b_out.size());
  if (g.with_proj) {
    g.proj = Eigen::MatrixXd::Zero(p.proj.rows(), p.proj.cols());
    g.b_proj = Eigen::VectorXd::Zero(p.b_proj.size());
  }
  return g;
}

DiscGradients DiscGradients::zero_like(const DiscriminatorParams& p) {
  DiscGradients g;
  g.dims = p.dims;
  g.embedding = Eigen::MatrixXd::Zero(p.embedding.rows(), p.embedding.cols());
  g.w_in = Eigen::MatrixXd::Zero(p.w_in.rows(), p.w_in.cols());
  g.w_forget = Eigen::MatrixXd::Zero(p.w_forget.rows(), p.w_forget.cols());
  g.w_cell = Eigen::MatrixXd::Zero(p.w_cell.rows(), p.w_cell.cols());
  g.w_out = Eigen::MatrixXd::Zero(p.w_out.rows(), p.w_out.cols());
  g.b_in = Eigen::VectorXd::Zero(p.b_in.size());
  g.b_forget = Eigen::VectorXd::Zero(p.b_forget.size());
  g.b_cell = Eigen::VectorXd::Zero(p.b_cell.size());
  g.b_out = Eigen::VectorXd::Zero(p.b_out.size());
  g.head_w = Eigen::VectorXd::Zero(p.head_w.size());
  g.head_b = Eigen::VectorXd::Zero(1);
  return g;
}

LmGradients nll_gradients(const LstmLmParams& p, const corpus::Sentence& s, double alpha,
                          double* nll_out) {
  const ForwardTrace tr = forward_teacher(p, s);
  const double total = static_cast<double>(s.ids.size());
  double nll_sum = 0.0;
  const auto dlogits = nll_dlogits(tr, s, alpha, total, &nll_sum);
  if (nll_out) *nll_out = nll_sum / total;
  LmGradients acc = LmGradients::zero_like(p);
  lm_backward(p, tr, dlogits, acc);
  return acc;
}

LmGradients numeric_gradients(const LstmLmParams& p, const corpus::Sentence& s, double alpha,
                              double step) {
  LstmLmParams copy = p;
  LmGradients grads = LmGradients::zero_like(p);
  FlatBlocks params = flat_lm(copy);
  FlatBlocks out = flat_lm(grads);
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (Eigen::Index i = 0; i < params[b].size(); ++i) {
      const double saved = params[b](i);
      params[b](i) = saved + step;
      const double up = model::sequence_nll(copy, s, alpha);
      params[b](i) = saved - step;
      const double down = model::sequence_nll(copy, s, alpha);
      params[b](i) = saved;
      out[b](i) = (up - down) / (2.0 * step);
    }
  }
  return grads;
}

GradCheckReport gradient_check(const LstmLmParams& p, const corpus::Sentence& s,
                               double tolerance, double fd_step) {
  if (s.ids.size() < 2) throw Error("nothing to check");
  GradCheckReport report;
  report.tolerance = tolerance;
  report.fd_step = fd_step;
  LmGradients analytic = nll_gradients(p, s, 1.0);
  LmGradients numeric = numeric_gradients(p, s, 1.0, fd_step);
  FlatBlocks fa = flat_lm(analytic);
  FlatBlocks fn = flat_lm(numeric);
  std::vector<std::string> names;
  model::visit_blocks(analytic, [&](const char* name, auto&) { names.emplace_back(name); });
  for (std::size_t b = 0; b < fa.size(); ++b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < fa[b].size(); ++i) {
      const double a = fa[b](i), n = fn[b](i);
      const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
      worst = std::max(worst, rel);
    }
    report.blocks.push_back({names[b], worst});
    report.max_rel_err = std::max(report.max_rel_err, worst);
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

std::pair<LstmLmParams, TrainTrace> mle_train(const LstmLmParams& init,
                                              const corpus::Corpus& train,
                                              const corpus::Corpus& valid,
                                              const TrainConfig& cfg,
                                              const ProgressFn& progress) {
  if (train.sentences.empty() || valid.sentences.empty()) throw Error("mle_train: empty corpus");
  if (!(cfg.learning_rate >= 0.0)) throw Error("mle_train: bad learning rate");
  if (cfg.batch_size < 1) throw Error("mle_train: batch_size must be >= 1");
  if (!(cfg.train_temperature > 0.0)) throw Error("mle_train: train_temperature must be > 0");
  if (init.oracle) throw Error("mle_train: refusing to train an oracle model");

  const auto t0 = Clock::now();
  LstmLmParams params = init;
  Adam opt;
  RandomStream shuffle_rs(mix_seed(cfg.seed, 0x3007ULL));

  LstmLmParams best = params;
  double best_valid = std::numeric_limits<double>::infinity();
  int since_best = 0;
  TrainTrace trace;
  long step = 0;

  std::vector<int> order(train.sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  LmGradients grads = LmGradients::zero_like(params);
  FlatBlocks gflat = flat_lm(grads);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rs.shuffle(order);
    double epoch_nll_sum = 0.0;
    long epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      ++step;
      zero_blocks(gflat);
      double batch_tokens = 0.0;
      for (std::size_t k = start; k < end; ++k)
        batch_tokens += static_cast<double>(train.sentences[order[k]].ids.size());
      double batch_nll_sum = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const corpus::Sentence& s = train.sentences[order[k]];
        const ForwardTrace tr = forward_teacher(params, s);
        double nll_sum = 0.0;
        const auto dlogits = nll_dlogits(tr, s, cfg.train_temperature, batch_tokens, &nll_sum);
        batch_nll_sum += nll_sum;
        lm_backward(params, tr, dlogits, grads);
      }
      if (!std::isfinite(batch_nll_sum))
        throw Error("divergence (NaN loss) at step " + std::to_string(step));
      epoch_nll_sum += batch_nll_sum;
      epoch_tokens += static_cast<long>(batch_tokens);
      if (cfg.learning_rate > 0.0) {
        clip_gradients(gflat, cfg.grad_clip_norm);
        FlatBlocks pflat = flat_lm(params);
        opt.step(pflat, gflat, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
        check_finite(pflat, "mle_train", step);
      }
    }
    const double valid_nll = evaluate_nll(params, valid);
    TraceRecord rec{epoch, "mle", epoch_nll_sum / static_cast<double>(epoch_tokens), valid_nll,
                    seconds_since(t0)};
    trace.records.push_back(rec);
    if (progress) progress(rec);
    if (valid_nll < best_valid - 1e-12) {
      best_valid = valid_nll;
      best = params;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  return {std::move(best), std::move(trace)};
}

double evaluate_nll(const LstmLmParams& p, const corpus::Corpus& corpus) {
  if (corpus.sentences.empty()) throw Error("evaluate_nll: empty corpus");
  double sum = 0.0;
  for (const auto& s : corpus.sentences) sum += model::sequence_nll(p, s, 1.0);
  return sum / static_cast<double>(corpus.sentences.size());
}

double rollout_reward(const LstmLmParams& gen, const DiscriminatorParams& disc,
                      const std::vector<int>& prefix, int rollout_count, std::uint64_t seed,
                      int max_len, int fixed_len) {
  if (rollout_count < 1) throw Error("rollout_reward: rollout_count must be >= 1");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(gen.dims.hidden_dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(gen.dims.hidden_dim);
  int input = corpus::kBos;
  for (int id : prefix) {
    auto cache = model::detail::lstm_step(gen, h, c, input);
    h = std::move(cache.h);
    c = std::move(cache.c);
    input = id;
  }
  auto cache = model::detail::lstm_step(gen, h, c, input);
  const Eigen::VectorXd logits = gen.embedding * model::detail::pre_logit(gen, cache.h);
  double total = 0.0;
  for (int r = 0; r < rollout_count; ++r) {
    RandomStream rs(mix_seed(seed, 0x2011ULL, static_cast<std::uint64_t>(r)));
    std::vector<int> tokens = prefix;
    decoding::ancestral_continue(gen, cache.h, cache.c, logits, tokens, 1.0, max_len, fixed_len,
                                 rs);
    corpus::Sentence sent{std::move(tokens)};
    total += model::discriminate(disc, sent);
  }
  return total / rollout_count;
}

double mean_conditional_entropy(const LstmLmParams& p, int n_samples, int max_len, int fixed_len,
                                std::uint64_t seed) {
  if (n_samples < 1) throw Error("mean_conditional_entropy: n_samples must be >= 1");
  double total = 0.0;
  long steps = 0;
  for (int i = 0; i < n_samples; ++i) {
    RandomStream rs(mix_seed(seed, 0xE27ULL, static_cast<std::uint64_t>(i)));
    FreeTrace tr = free_forward(p, max_len, fixed_len, rs);
    for (const FreeStep& st : tr.steps) {
      if (!st.sampled) continue;
      Eigen::VectorXd masked = st.logits;
      model::apply_sample_mask(masked, st.allow_eos);
      total += model::entropy(model::conditional_dist(masked, 1.0));
      ++steps;
    }
  }
  return steps ? total / static_cast<double>(steps) : 0.0;
}

AdvResult adversarial_train(const LstmLmParams& gen_init, const DiscriminatorParams& disc_init,
                            const corpus::Corpus& train, const corpus::Corpus& valid,
                            const AdvConfig& cfg, const ProgressFn& progress) {
  if (cfg.rollout_count < 1) throw Error("adversarial_train: rollout_count must be >= 1");
  if (cfg.mle_interleave_ratio < 0.0 || cfg.mle_interleave_ratio > 1.0)
    throw Error("adversarial_train: mle_interleave_ratio must be in [0,1]");
  if (cfg.baseline_learning_rate < 0.0 || cfg.entropy_bonus_weight < 0.0 ||
      cfg.disc_learning_rate < 0.0)
    throw Error("adversarial_train: rates must be >= 0");

  const auto t0 = Clock::now();
  AdvResult result{gen_init, disc_init, {}};

  // Phase 1: MLE pretraining.
  long switch_step = 0;
  if (cfg.pretrain_epochs > 0) {
    TrainConfig pre = cfg.base;
    pre.max_epochs = cfg.pretrain_epochs;
    pre.early_stop_patience = cfg.pretrain_epochs;  // fixed budget, no early exit
    pre.seed = mix_seed(cfg.seed, 0x93EULL);
    auto [pretrained, pre_trace] = mle_train(result.gen, train, valid, pre, progress);
    result.gen = std::move(pretrained);
    result.trace.records = std::move(pre_trace.records);
    switch_step = result.trace.records.empty() ? 0 : result.trace.records.back().step;
  }
  result.trace.phase_switch_step = switch_step;
  if (cfg.adv_steps <= 0) return result;

  Adam gen_opt, disc_opt;
  const int batch = std::max(1, cfg.base.batch_size);
  const int vocab = result.gen.dims.vocab_size;

  // Learned baseline: scalar affine map from the generator hidden state.
  Eigen::VectorXd base_w = Eigen::VectorXd::Zero(result.gen.dims.hidden_dim);
  double base_b = 0.0;

  RandomStream data_rs(mix_seed(cfg.seed, 0xDA7AULL));
  RandomStream choice_rs(mix_seed(cfg.seed, 0xC401CEULL));

  LmGradients grads = LmGradients::zero_like(result.gen);
  FlatBlocks gflat = flat_lm(grads);
  int perfect_disc_run = 0;
  bool collapse_warned = false;

  for (int step = 1; step <= cfg.adv_steps; ++step) {
    // Discriminator updates on fresh real/fake batches.
    for (int d = 0; d < cfg.disc_steps_per_gen_step; ++d) {
      const auto res =
          disc_update(result.disc, disc_opt, result.gen, train, cfg, data_rs,
                      mix_seed(cfg.seed, 0xD5EEDULL, static_cast<std::uint64_t>(step) * 1000 + d));
      if (res.accuracy >= 1.0) {
        if (++perfect_disc_run >= cfg.collapse_window && !collapse_warned) {
          result.trace.warnings.push_back(
              "reward collapse: discriminator at accuracy 1.0 for " +
              std::to_string(perfect_disc_run) + " consecutive updates (step " +
              std::to_string(step) + ")");
          collapse_warned = true;
        }
      } else {
        perfect_disc_run = 0;
      }
    }

    // Generator update: REINFORCE, or an interleaved MLE step.
    zero_blocks(gflat);
    const bool use_mle = choice_rs.uniform01() < cfg.mle_interleave_ratio;
    if (use_mle) {
      double batch_tokens = 0.0;
      std::vector<const corpus::Sentence*> batch_sents;
      for (int b = 0; b < batch; ++b) {
        const auto& s = train.sentences[static_cast<std::size_t>(data_rs.below(train.sentences.size()))];
        batch_sents.push_back(&s);
        batch_tokens += static_cast<double>(s.ids.size());
      }
      for (const corpus::Sentence* s : batch_sents) {
        const ForwardTrace tr = forward_teacher(result.gen, *s);
        const auto dlogits = nll_dlogits(tr, *s, cfg.base.train_temperature, batch_tokens, nullptr);
        lm_backward(result.gen, tr, dlogits, grads);
      }
    } else {
      // Collect traces and rewards first so the normalization (total action
      // count) is known before backprop.
      std::vector<FreeTrace> traces;
      std::vector<std::vector<double>> advantages(batch);
      long n_actions = 0;
      double baseline_dw_scale = 0.0;
      Eigen::VectorXd base_dw = Eigen::VectorXd::Zero(base_w.size());
      double base_db = 0.0;
      for (int b = 0; b < batch; ++b) {
        RandomStream rs(mix_seed(cfg.seed, 0x6E2ULL,
                                 static_cast<std::uint64_t>(step) * 100000 + b));
        traces.push_back(free_forward(result.gen, cfg.max_len, cfg.fixed_len, rs));
        n_actions += static_cast<long>(traces.back().steps.size());
      }
      for (int b = 0; b < batch; ++b) {
        const FreeTrace& tr = traces[b];
        const double seq_reward = model::discriminate(result.disc, tr.sentence);
        advantages[b].resize(tr.steps.size(), 0.0);
        for (std::size_t t = 0; t < tr.steps.size(); ++t) {
          if (!tr.steps[t].sampled) continue;
          double reward;
          if (!cfg.step_level_reward || t + 1 == tr.steps.size()) {
            reward = seq_reward;
          } else {
            // Monte-Carlo completion from the state after the sampled token.
            const StepCache& next = tr.steps[t + 1].cache;
            const Eigen::VectorXd& next_logits = tr.steps[t + 1].logits;
            double total = 0.0;
            for (int r = 0; r < cfg.rollout_count; ++r) {
              RandomStream rs(mix_seed(mix_seed(cfg.seed, 0x7011ULL),
                                       (static_cast<std::uint64_t>(step) << 24) ^
                                           (static_cast<std::uint64_t>(b) << 12) ^ t,
                                       static_cast<std::uint64_t>(r)));
              std::vector<int> tokens(tr.sentence.ids.begin(),
                                      tr.sentence.ids.begin() + static_cast<long>(t) + 1);
              decoding::ancestral_continue(result.gen, next.h, next.c, next_logits, tokens, 1.0,
                                           cfg.max_len, cfg.fixed_len, rs);
              corpus::Sentence sent{std::move(tokens)};
              total += model::discriminate(result.disc, sent);
            }
            reward = total / cfg.rollout_count;
          }
          const double value = base_w.dot(tr.steps[t].cache.h) + base_b;
          advantages[b][t] = reward - value;
          // Squared-error gradient for the baseline (no flow into the
          // generator).
          base_dw += 2.0 * (value - reward) * tr.steps[t].cache.h;
          base_db += 2.0 * (value - reward);
          baseline_dw_scale += 1.0;
        }
      }
      if (n_actions == 0) throw Error("adversarial_train: no sampled actions");
      const double scale = 1.0 / static_cast<double>(n_actions);
      for (int b = 0; b < batch; ++b) {
        const FreeTrace& tr = traces[b];
        std::vector<Eigen::VectorXd> dlogits(tr.steps.size());
        ForwardTrace ft;
        ft.caches.reserve(tr.steps.size());
        ft.pre_logits.reserve(tr.steps.size());
        ft.logits.reserve(tr.steps.size());
        for (std::size_t t = 0; t < tr.steps.size(); ++t) {
          const FreeStep& st = tr.steps[t];
          ft.caches.push_back(st.cache);
          ft.pre_logits.push_back(st.pre_logit);
          ft.logits.push_back(st.logits);
          if (!st.sampled) continue;  // forced EOS carries no policy gradient
          Eigen::VectorXd masked = st.logits;
          model::apply_sample_mask(masked, st.allow_eos);
          const Eigen::VectorXd pi = model::conditional_dist(masked, 1.0);
          Eigen::VectorXd d = advantages[b][t] * pi;
          d(st.token) -= advantages[b][t];
          if (cfg.entropy_bonus_weight > 0.0) {
            const double ent = model::entropy(pi);
            for (int j = 0; j < vocab; ++j) {
              if (pi(j) > 0.0) d(j) += cfg.entropy_bonus_weight * pi(j) * (std::log(pi(j)) + ent);
            }
          }
          dlogits[t] = d * scale;
        }
        lm_backward(result.gen, ft, dlogits, grads);
      }
      // Baseline SGD update.
      if (baseline_dw_scale > 0.0 && cfg.baseline_learning_rate > 0.0) {
        base_w -= cfg.baseline_learning_rate * base_dw / baseline_dw_scale;
        base_b -= cfg.baseline_learning_rate * base_db / baseline_dw_scale;
      }
    }
    clip_gradients(gflat, cfg.base.grad_clip_norm);
    FlatBlocks pflat = flat_lm(result.gen);
    gen_opt.step(pflat, gflat, cfg.base.learning_rate, cfg.base.adam_beta1, cfg.base.adam_beta2,
                 cfg.base.adam_eps);
    check_finite(pflat, "adversarial_train", step);

    if (step % cfg.eval_every == 0 || step == cfg.adv_steps) {
      const double valid_nll = evaluate_nll(result.gen, valid);
      // Teacher-forced NLL on a capped train slice keeps tracing cheap.
      corpus::Corpus slice;
      slice.vocab = train.vocab;
      const std::size_t cap = std::min<std::size_t>(train.sentences.size(), 200);
      slice.sentences.assign(train.sentences.begin(), train.sentences.begin() + cap);
      TraceRecord rec{switch_step + step, "adversarial", evaluate_nll(result.gen, slice),
                      valid_nll, seconds_since(t0)};
      result.trace.records.push_back(rec);
      if (progress) progress(rec);
    }
  }
  return result;
}

model::DiscriminatorParams train_discriminator_only(const LstmLmParams& gen,
                                                    const corpus::Corpus& real,
                                                    const AdvConfig& cfg) {
  if (real.sentences.empty()) throw Error("train_discriminator_only: empty corpus");
  DiscriminatorParams disc = model::init_discriminator(
      {gen.dims.vocab_size, gen.dims.embed_dim, gen.dims.hidden_dim},
      mix_seed(cfg.seed, 0xD0ULL), 0.1);
  Adam opt;
  RandomStream rs(mix_seed(cfg.seed, 0xD15C2ULL));
  const int steps = std::max(1, cfg.adv_steps);
  for (int step = 1; step <= steps; ++step) {
    disc_update(disc, opt, gen, real, cfg, rs,
                mix_seed(cfg.seed, 0xD15C3ULL, static_cast<std::uint64_t>(step)));
  }
  return disc;
}

}  // namespace qds::training
