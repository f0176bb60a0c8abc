// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include "qdsweep/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qdsweep/rng.hpp"

namespace qds::sweep {

using corpus::Corpus;
using model::LstmLmParams;

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sd_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size() - 1));
}

double mean_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  return xs.empty() ? 0.0 : m / static_cast<double>(xs.size());
}

decoding::DecoderConfig decoder_for(const SweepSpec& spec, double control,
                                    std::uint64_t seed) {
  decoding::DecoderConfig cfg;
  cfg.max_len = spec.max_len;
  cfg.fixed_len = spec.fixed_len;
  cfg.seed = seed;
  cfg.max_attempts = spec.max_attempts;
  switch (spec.control) {
    case ControlKind::temperature:
      cfg.strategy = decoding::Strategy::ancestral;
      cfg.alpha = control;
      break;
    case ControlKind::beam_size:
      cfg.strategy = decoding::Strategy::stochastic_beam;
      cfg.beam_size = static_cast<int>(std::lround(control));
      cfg.alpha = 1.0;
      break;
    case ControlKind::gen_threshold:
      cfg.strategy = decoding::Strategy::gen_rejection;
      cfg.threshold = control;
      cfg.alpha = 1.0;
      break;
    case ControlKind::disc_threshold:
      cfg.strategy = decoding::Strategy::disc_rejection;
      cfg.disc_threshold = control;
      cfg.discriminator = spec.disc;
      break;
  }
  return cfg;
}

double distinct_fraction(const Corpus& c) {
  std::set<std::vector<int>> uniq;
  for (const auto& s : c.sentences) uniq.insert(s.ids);
  return static_cast<double>(uniq.size()) / static_cast<double>(c.sentences.size());
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(std::string("run_sweep: ") + what);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

}  // namespace

const char* control_name(ControlKind c) {
  switch (c) {
    case ControlKind::temperature: return "temperature";
    case ControlKind::beam_size: return "beam_size";
    case ControlKind::gen_threshold: return "gen_threshold";
    case ControlKind::disc_threshold: return "disc_threshold";
  }
  return "unknown";
}

const char* metric_pair_name(MetricPair m) {
  switch (m) {
    case MetricPair::bleu_sbleu: return "bleu_sbleu";
    case MetricPair::lm_rlm: return "lm_rlm";
    case MetricPair::oracle_nll: return "oracle_nll";
  }
  return "unknown";
}

std::vector<double> default_alpha_grid() {
  return {1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.6, 0.5, 0.4, 0.2, 0.05, 0.001};
}

SweepCurve run_sweep(const LstmLmParams& m, const SweepSpec& spec, const std::string& model_id) {
  require(!spec.control_values.empty(), "no control values");
  require(spec.samples_per_point >= 100, "samples_per_point must be >= 100");
  require(!spec.seeds.empty(), "no seeds");
  if (spec.metric_pair == MetricPair::bleu_sbleu) require(spec.references, "references required");
  if (spec.metric_pair == MetricPair::lm_rlm) {
    require(spec.real_train && spec.real_valid && spec.real_test,
            "real train/valid/test required");
  }
  if (spec.metric_pair == MetricPair::oracle_nll)
    require(spec.oracle && spec.real_test, "oracle and real_test required");
  if (spec.control == ControlKind::disc_threshold) require(spec.disc, "discriminator required");

  std::shared_ptr<const corpus::Vocab> vocab = spec.vocab;
  if (!vocab && spec.references) vocab = spec.references->vocab;
  if (!vocab && spec.real_test) vocab = spec.real_test->vocab;
  require(static_cast<bool>(vocab), "no vocabulary available");
  require(vocab->size() == m.dims.vocab_size, "model/corpus vocab size mismatch");

  // The unigram floor of the lm_rlm pair is a property of the real data.
  double unigram_floor = kNaN;
  if (spec.metric_pair == MetricPair::lm_rlm && spec.apply_unigram_floor)
    unigram_floor = metrics::unigram_nll(*spec.real_train, *spec.real_test);

  SweepCurve curve;
  curve.model_id = model_id;
  curve.control = control_name(spec.control);
  curve.metric_pair = metric_pair_name(spec.metric_pair);

  for (double control : spec.control_values) {
    SweepPoint point;
    point.control = control;
    point.seed = spec.seeds.front();
    point.samples = static_cast<long>(spec.samples_per_point) *
                    static_cast<long>(spec.seeds.size());
    std::vector<double> qualities, diversities;
    std::string fail_reason;
    double elapsed = 0.0;
    bool collapsed = false;

    for (std::uint64_t seed : spec.seeds) {
      const auto t0 = Clock::now();
      decoding::SampleBatch batch;
      try {
        batch = decoding::sample(m, decoder_for(spec, control, seed), spec.samples_per_point);
      } catch (const Error& e) {
        fail_reason = e.what();
        break;
      }
      Corpus generated;
      generated.vocab = vocab;
      generated.split = corpus::Split::generated;
      generated.sentences = std::move(batch.sentences);

      double quality = kNaN, diversity = kNaN;
      switch (spec.metric_pair) {
        case MetricPair::bleu_sbleu:
          quality = -metrics::bleu_n(generated, *spec.references, spec.bleu_n, spec.metric_cfg);
          diversity = metrics::self_bleu_n(generated, spec.bleu_n, spec.metric_cfg);
          if (diversity > 0.995) collapsed = true;
          break;
        case MetricPair::lm_rlm: {
          training::TrainConfig lm_cfg = spec.lm_cfg;
          lm_cfg.seed = mix_seed(spec.lm_cfg.seed, seed);
          quality = metrics::lm_score(*spec.real_train, *spec.real_valid, generated, lm_cfg);
          diversity = metrics::reverse_lm_score(generated, *spec.real_test, lm_cfg);
          break;
        }
        case MetricPair::oracle_nll: {
          quality = metrics::nll_under_model(*spec.oracle, generated, 1.0);
          const double alpha =
              spec.control == ControlKind::temperature ? std::max(control, 1e-6) : 1.0;
          diversity = metrics::nll_under_model(m, *spec.real_test, alpha);
          break;
        }
      }
      if (distinct_fraction(generated) < 0.02) collapsed = true;
      elapsed += std::chrono::duration<double>(Clock::now() - t0).count();
      qualities.push_back(quality);
      diversities.push_back(diversity);
    }

    point.seconds = elapsed;
    if (!fail_reason.empty()) {
      point.quality = kNaN;
      point.diversity = kNaN;
      // Reasons get parenthesized with commas stripped to keep the CSV flat.
      std::string clean = fail_reason;
      std::replace(clean.begin(), clean.end(), ',', ';');
      std::replace(clean.begin(), clean.end(), '\n', ' ');
      point.flag = "failed(" + clean + ")";
    } else {
      point.quality = mean_of(qualities);
      point.diversity = mean_of(diversities);
      if (spec.seeds.size() > 1) {
        point.quality_se = sd_of(qualities) / std::sqrt(static_cast<double>(qualities.size()));
        point.diversity_se =
            sd_of(diversities) / std::sqrt(static_cast<double>(diversities.size()));
      }
      point.flag = "ok";
      if (collapsed) point.flag = "collapsed";
      if (!std::isnan(unigram_floor) && point.diversity >= unigram_floor) point.flag = "floor";
      if (!std::isnan(spec.diversity_ceiling) && point.diversity < spec.diversity_ceiling)
        point.flag = "ceiling";
    }
    curve.points.push_back(std::move(point));
  }
  return curve;
}

double auc(const SweepCurve& curve, double diversity_lo, double diversity_hi) {
  if (!(diversity_lo < diversity_hi)) throw Error("auc: empty diversity window");
  std::vector<std::pair<double, double>> pts;  // (diversity, quality)
  for (const auto& p : curve.points)
    if (std::isfinite(p.quality) && std::isfinite(p.diversity))
      pts.emplace_back(p.diversity, p.quality);
  std::sort(pts.begin(), pts.end());
  if (pts.size() < 2) throw Error("auc: need at least 2 usable points");
  if (pts.back().first <= diversity_lo || pts.front().first >= diversity_hi)
    throw Error("auc: no points intersect the diversity window");

  const double lo = std::max(diversity_lo, pts.front().first);
  const double hi = std::min(diversity_hi, pts.back().first);
  if (!(lo < hi)) throw Error("auc: window collapses to a point");

  auto interp = [&](double x) {
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (x <= pts[i].first) {
        const auto& [x0, y0] = pts[i - 1];
        const auto& [x1, y1] = pts[i];
        if (x1 == x0) return y1;
        const double t = (x - x0) / (x1 - x0);
        return y0 + t * (y1 - y0);
      }
    }
    return pts.back().second;
  };

  double area = 0.0;
  double prev_x = lo, prev_y = interp(lo);
  for (const auto& [x, y] : pts) {
    if (x <= lo) continue;
    if (x >= hi) break;
    area += 0.5 * (prev_y + y) * (x - prev_x);
    prev_x = x;
    prev_y = y;
  }
  area += 0.5 * (prev_y + interp(hi)) * (hi - prev_x);
  return area;
}

std::vector<BenchRow> bench_decoding(const LstmLmParams& m,
                                     const std::vector<decoding::DecoderConfig>& strategies,
                                     int n) {
  if (n < 100) throw Error("bench_decoding: n must be >= 100");
  std::vector<BenchRow> rows;
  for (const auto& cfg : strategies) {
    const auto batch = decoding::sample(m, cfg, n);
    BenchRow row;
    row.strategy = decoding::strategy_name(cfg.strategy);
    switch (cfg.strategy) {
      case decoding::Strategy::ancestral: row.control = cfg.alpha; break;
      case decoding::Strategy::greedy: row.control = 0.0; break;
      case decoding::Strategy::stochastic_beam: row.control = cfg.beam_size; break;
      case decoding::Strategy::gen_rejection: row.control = cfg.threshold; break;
      case decoding::Strategy::disc_rejection: row.control = cfg.disc_threshold; break;
    }
    row.n = n;
    row.seconds = batch.elapsed_seconds;
    for (const auto& s : batch.sentences) row.tokens += s.content_len();
    row.acceptance_rate = batch.acceptance_rate();
    rows.push_back(std::move(row));
  }
  return rows;
}

training::TrainTrace entropy_drop_trace(const LstmLmParams& init, const Corpus& train,
                                        const Corpus& valid,
                                        const training::TrainConfig& mle_cfg,
                                        const training::AdvConfig& adv_cfg,
                                        const training::ProgressFn& progress) {
  auto [pretrained, trace] = training::mle_train(init, train, valid, mle_cfg, progress);
  const long switch_step = trace.records.empty() ? 0 : trace.records.back().step;
  trace.phase_switch_step = switch_step;

  training::AdvConfig adv = adv_cfg;
  adv.pretrain_epochs = 0;  // the MLE phase above already ran
  const auto disc_init = model::init_discriminator(
      pretrained.dims, mix_seed(adv.seed, 0xD15C4ULL), 0.1);
  auto result = training::adversarial_train(pretrained, disc_init, train, valid, adv, {});
  for (auto rec : result.trace.records) {
    rec.step += switch_step;
    if (progress) progress(rec);
    trace.records.push_back(std::move(rec));
  }
  for (const auto& w : result.trace.warnings) trace.warnings.push_back(w);
  return trace;
}

std::vector<TempStudyRow> train_temp_study(const std::vector<double>& alpha_trains,
                                           model::Dims dims, const Corpus& train,
                                           const Corpus& valid, const Corpus& references,
                                           const training::TrainConfig& base, int bleu_n,
                                           int samples, int max_len, int fixed_len,
                                           const training::ProgressFn& progress) {
  if (alpha_trains.empty()) throw Error("train_temp_study: no training temperatures");
  std::vector<TempStudyRow> rows;
  const auto init = model::init_params(dims, mix_seed(base.seed, 0x7E3057ULL), 0.1);
  for (double at : alpha_trains) {
    if (!(at > 0.0)) throw Error("train_temp_study: alpha_train must be > 0");
    training::TrainConfig cfg = base;
    cfg.train_temperature = at;
    auto [trained, trace] = training::mle_train(init, train, valid, cfg, progress);
    decoding::DecoderConfig dec;
    dec.strategy = decoding::Strategy::ancestral;
    dec.alpha = 1.0;
    dec.max_len = max_len;
    dec.fixed_len = fixed_len;
    dec.seed = mix_seed(base.seed, 0x7E5705ULL);
    auto batch = decoding::sample(trained, dec, samples);
    Corpus generated;
    generated.vocab = references.vocab;
    generated.split = corpus::Split::generated;
    generated.sentences = std::move(batch.sentences);
    TempStudyRow row;
    row.alpha_train = at;
    row.neg_bleu = -metrics::bleu_n(generated, references, bleu_n);
    row.self_bleu = metrics::self_bleu_n(generated, bleu_n);
    row.samples = samples;
    row.seed = base.seed;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Synthetic-oracle experiment
// ---------------------------------------------------------------------------

namespace {

Corpus sample_oracle_corpus(const LstmLmParams& oracle,
                            std::shared_ptr<const corpus::Vocab> vocab, int n, int seq_len,
                            std::uint64_t seed, corpus::Split split) {
  decoding::DecoderConfig cfg;
  cfg.strategy = decoding::Strategy::ancestral;
  cfg.alpha = 1.0;
  cfg.max_len = seq_len;
  cfg.fixed_len = seq_len;
  cfg.seed = seed;
  auto batch = decoding::sample(oracle, cfg, n);
  Corpus c;
  c.vocab = std::move(vocab);
  c.split = split;
  c.sentences = std::move(batch.sentences);
  return c;
}

}  // namespace

SyntheticReport run_synthetic_experiment(const SyntheticConfig& cfg, const std::string& out_dir,
                                         csv::TimingMode timing,
                                         const training::ProgressFn& progress) {
  if (cfg.seeds.empty()) throw Error("synthetic experiment: no seeds");
  namespace fs = std::filesystem;
  const bool write = !out_dir.empty();
  if (write) fs::create_directories(out_dir);
  auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

  auto vocab = std::make_shared<corpus::Vocab>(corpus::Vocab::synthetic(cfg.oracle_vocab));
  const LstmLmParams oracle = model::make_oracle(cfg.oracle_vocab, cfg.oracle_seed);

  const Corpus train = sample_oracle_corpus(oracle, vocab, cfg.n_train, cfg.seq_len,
                                            mix_seed(cfg.oracle_seed, 1), corpus::Split::train);
  const Corpus valid = sample_oracle_corpus(oracle, vocab, cfg.n_valid, cfg.seq_len,
                                            mix_seed(cfg.oracle_seed, 2), corpus::Split::valid);
  const Corpus test = sample_oracle_corpus(oracle, vocab, cfg.n_test, cfg.seq_len,
                                           mix_seed(cfg.oracle_seed, 3), corpus::Split::test);
  if (write) {
    vocab->save(path("vocab.txt"));
    model::save_params(oracle, path("oracle.model"));
    corpus::save_corpus(train, path("train.txt"));
    corpus::save_corpus(valid, path("valid.txt"));
    corpus::save_corpus(test, path("test.txt"));
  }

  SyntheticReport report;

  SweepSpec spec;
  spec.control = ControlKind::temperature;
  spec.control_values = cfg.alpha_grid;
  spec.metric_pair = MetricPair::oracle_nll;
  spec.samples_per_point = cfg.samples_per_point;
  spec.max_len = cfg.seq_len;
  spec.fixed_len = cfg.seq_len;
  spec.oracle = &oracle;
  spec.real_test = &test;
  spec.vocab = vocab;

  for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
    const std::uint64_t seed = cfg.seeds[si];
    SyntheticSeedResult res;
    res.seed = seed;

    training::TrainConfig mle_cfg = cfg.mle;
    mle_cfg.seed = mix_seed(cfg.mle.seed, seed);
    const auto init =
        model::init_params(cfg.student_dims, mix_seed(seed, 0x57EDULL), 0.1);
    auto [mle_student, mle_trace] = training::mle_train(init, train, valid, mle_cfg, progress);
    res.mle_trace = std::move(mle_trace);

    spec.seeds = {seed};
    res.mle_curve = run_sweep(mle_student, spec, "mle_seed" + std::to_string(seed));

    model::LstmLmParams adv_student = mle_student;
    if (cfg.run_adversarial) {
      training::AdvConfig adv_cfg = cfg.adv;
      adv_cfg.seed = mix_seed(cfg.adv.seed, seed);
      adv_cfg.max_len = cfg.seq_len;
      adv_cfg.fixed_len = cfg.seq_len;
      const auto disc_init = model::init_discriminator(
          cfg.student_dims, mix_seed(seed, 0xD15C5ULL), 0.1);
      auto adv_res =
          training::adversarial_train(init, disc_init, train, valid, adv_cfg, progress);
      adv_student = std::move(adv_res.gen);
      res.adv_trace = std::move(adv_res.trace);
      res.adv_curve = run_sweep(adv_student, spec, "adv_seed" + std::to_string(seed));
    }

    if (cfg.run_adversarial) {
      // Shared diversity window: overlap of the two curves' usable spans.
      auto span = [](const SweepCurve& c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& p : c.points)
          if (std::isfinite(p.diversity)) {
            lo = std::min(lo, p.diversity);
            hi = std::max(hi, p.diversity);
          }
        return std::pair{lo, hi};
      };
      const auto [mlo, mhi] = span(res.mle_curve);
      const auto [alo, ahi] = span(res.adv_curve);
      res.window_lo = std::max(mlo, alo);
      res.window_hi = std::min(mhi, ahi);
      if (res.window_lo < res.window_hi) {
        try {
          res.mle_auc = auc(res.mle_curve, res.window_lo, res.window_hi);
          res.adv_auc = auc(res.adv_curve, res.window_lo, res.window_hi);
          res.auc_valid = true;
        } catch (const Error&) {
          res.auc_valid = false;
        }
      }
    }

    if (write) {
      model::save_params(mle_student, path("mle_seed" + std::to_string(seed) + ".model"));
      write_curve_csv(res.mle_curve, path("curve_mle_seed" + std::to_string(seed) + ".csv"),
                      timing);
      write_trace_csv(res.mle_trace, path("trace_mle_seed" + std::to_string(seed) + ".csv"),
                      timing);
      if (cfg.run_adversarial) {
        model::save_params(adv_student, path("adv_seed" + std::to_string(seed) + ".model"));
        write_curve_csv(res.adv_curve, path("curve_adv_seed" + std::to_string(seed) + ".csv"),
                        timing);
        write_trace_csv(res.adv_trace, path("trace_adv_seed" + std::to_string(seed) + ".csv"),
                        timing);
      }
    }

    // Table-1-style rows come from the first seed's MLE student.
    if (si == 0) {
      for (double alpha : cfg.table1_alphas) {
        decoding::DecoderConfig dec;
        dec.strategy = decoding::Strategy::ancestral;
        dec.alpha = alpha;
        dec.max_len = cfg.seq_len;
        dec.fixed_len = cfg.seq_len;
        dec.seed = mix_seed(seed, 0x7AB1ULL);
        auto batch = decoding::sample(mle_student, dec, cfg.table1_samples);
        std::vector<double> nlls;
        nlls.reserve(batch.sentences.size());
        for (const auto& s : batch.sentences)
          nlls.push_back(model::sequence_nll(oracle, s, 1.0));
        Table1Row row;
        row.model = "mle";
        row.alpha = alpha;
        row.nll_oracle = mean_of(nlls);
        row.se = sd_of(nlls) / std::sqrt(static_cast<double>(nlls.size()));
        row.samples = cfg.table1_samples;
        report.table1.push_back(row);
      }
    }
    report.per_seed.push_back(std::move(res));
  }

  if (write) {
    {
      auto out = open_out(path("table1.csv"));
      out << kTable1Header << '\n';
      for (const auto& r : report.table1)
        out << r.model << ',' << csv::fmt(r.alpha) << ',' << csv::fmt(r.nll_oracle) << ','
            << csv::fmt(r.se) << ',' << r.samples << '\n';
    }
    {
      auto out = open_out(path("auc.csv"));
      out << kAucHeader << '\n';
      for (const auto& res : report.per_seed) {
        if (!res.auc_valid) continue;
        out << "mle_seed" << res.seed << ',' << csv::fmt(res.window_lo) << ','
            << csv::fmt(res.window_hi) << ',' << csv::fmt(res.mle_auc) << '\n';
        out << "adv_seed" << res.seed << ',' << csv::fmt(res.window_lo) << ','
            << csv::fmt(res.window_hi) << ',' << csv::fmt(res.adv_auc) << '\n';
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// CSV writers / reader
// ---------------------------------------------------------------------------

void write_curve_csv(const SweepCurve& curve, const std::string& path, csv::TimingMode timing) {
  auto out = open_out(path);
  out << kCurveHeader << '\n';
  for (const auto& p : curve.points)
    out << csv::fmt(p.control) << ',' << csv::fmt(p.quality) << ',' << csv::fmt(p.diversity)
        << ',' << csv::fmt(p.quality_se) << ',' << csv::fmt(p.diversity_se) << ','
        << csv::fmt_seconds(p.seconds, timing) << ',' << p.samples << ',' << p.seed << ','
        << p.flag << '\n';
}

SweepCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("curve csv: empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCurveHeader) throw Error("curve csv: unexpected header in '" + path + "'");
  SweepCurve curve;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 9)
      throw Error("curve csv: malformed row at line " + std::to_string(line_no));
    SweepPoint p;
    try {
      p.control = std::stod(cells[0]);
      p.quality = cells[1] == "nan" ? kNaN : std::stod(cells[1]);
      p.diversity = cells[2] == "nan" ? kNaN : std::stod(cells[2]);
      p.quality_se = std::stod(cells[3]);
      p.diversity_se = std::stod(cells[4]);
      p.seconds = std::stod(cells[5]);
      p.samples = std::stol(cells[6]);
      p.seed = std::stoull(cells[7]);
    } catch (const std::exception&) {
      throw Error("curve csv: bad number at line " + std::to_string(line_no));
    }
    // flag may have contained commas-turned-semicolons only; but any extra
    // cells were split from the reason text, so re-join them.
    p.flag = cells[8];
    for (std::size_t i = 9; i < cells.size(); ++i) p.flag += "," + cells[i];
    curve.points.push_back(std::move(p));
  }
  return curve;
}

void write_trace_csv(const training::TrainTrace& trace, const std::string& path,
                     csv::TimingMode timing) {
  auto out = open_out(path);
  out << kTraceHeader << '\n';
  bool marker_written = trace.phase_switch_step < 0;
  for (const auto& r : trace.records) {
    if (!marker_written && r.step > trace.phase_switch_step) {
      out << trace.phase_switch_step << ",switch,nan,nan,"
          << csv::fmt_seconds(0.0, csv::TimingMode::off) << '\n';
      marker_written = true;
    }
    out << r.step << ',' << r.phase << ',' << csv::fmt(r.train_nll) << ','
        << csv::fmt(r.valid_nll) << ',' << csv::fmt_seconds(r.seconds, timing) << '\n';
  }
  if (!marker_written)
    out << trace.phase_switch_step << ",switch,nan,nan,"
        << csv::fmt_seconds(0.0, csv::TimingMode::off) << '\n';
}

void write_eval_csv(const std::vector<metrics::MetricReport>& reports,
                    const std::string& path) {
  auto out = open_out(path);
  out << kEvalHeader << '\n';
  for (const auto& r : reports)
    out << r.metric << ',' << r.n << ',' << csv::fmt(r.value) << ',' << r.sample_count << ','
        << r.reference_count << ',' << csv::fmt(r.epsilon) << ',' << r.seed << '\n';
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path,
                     csv::TimingMode timing) {
  auto out = open_out(path);
  out << kBenchHeader << '\n';
  for (const auto& r : rows)
    out << r.strategy << ',' << csv::fmt(r.control) << ',' << r.n << ','
        << csv::fmt_seconds(r.seconds, timing) << ',' << r.tokens << ','
        << csv::fmt(r.acceptance_rate) << '\n';
}

void write_temp_study_csv(const std::vector<TempStudyRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << kTempStudyHeader << '\n';
  for (const auto& r : rows)
    out << csv::fmt(r.alpha_train) << ',' << csv::fmt(r.neg_bleu) << ',' << csv::fmt(r.self_bleu)
        << ',' << r.samples << ',' << r.seed << '\n';
}

void write_gradcheck_csv(const training::GradCheckReport& report, const std::string& path) {
  auto out = open_out(path);
  out << kGradCheckHeader << '\n';
  for (const auto& b : report.blocks)
    out << b.name << ',' << csv::fmt(b.max_rel_err) << ','
        << (b.max_rel_err < report.tolerance ? "1" : "0") << '\n';
}

}  // namespace qds::sweep
