// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qdsweep/csv.hpp"
#include "qdsweep/decoding.hpp"
#include "qdsweep/metrics.hpp"
#include "qdsweep/training.hpp"

namespace qds::sweep {

enum class ControlKind { temperature, beam_size, gen_threshold, disc_threshold };
enum class MetricPair { bleu_sbleu, lm_rlm, oracle_nll };

const char* control_name(ControlKind c);
const char* metric_pair_name(MetricPair m);

/// The default temperature grid, denser near 1.0 where curves bend.
std::vector<double> default_alpha_grid();

struct SweepSpec {
  ControlKind control = ControlKind::temperature;
  std::vector<double> control_values;  // sorted descending in entropy
  MetricPair metric_pair = MetricPair::bleu_sbleu;
  int samples_per_point = 2000;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int bleu_n = 5;
  int max_len = corpus::kDefaultMaxLen;
  int fixed_len = 0;
  int max_attempts = 1000;  // rejection controls
  metrics::MetricConfig metric_cfg;
  training::TrainConfig lm_cfg;  // scoring LMs for the lm_rlm pair

  // Resources; which are required depends on metric_pair/control.
  const corpus::Corpus* references = nullptr;    // bleu_sbleu
  const corpus::Corpus* real_train = nullptr;    // lm_rlm
  const corpus::Corpus* real_valid = nullptr;    // lm_rlm
  const corpus::Corpus* real_test = nullptr;     // lm_rlm, oracle_nll (NLL_test)
  const model::LstmLmParams* oracle = nullptr;   // oracle_nll
  const model::DiscriminatorParams* disc = nullptr;  // disc_threshold control
  std::shared_ptr<const corpus::Vocab> vocab;    // for generated corpora

  // Range-stop flags: points beyond these are kept but flagged.
  double diversity_ceiling = std::numeric_limits<double>::quiet_NaN();
  bool apply_unigram_floor = true;  // lm_rlm: flag once RLM >= unigram bound
};

struct SweepPoint {
  double control = 0.0;
  double quality = 0.0;
  double diversity = 0.0;
  double quality_se = 0.0;
  double diversity_se = 0.0;
  double seconds = 0.0;
  long samples = 0;
  std::uint64_t seed = 0;
  std::string flag;  // "ok" | "collapsed" | "floor" | "ceiling" | "failed(...)"
};

struct SweepCurve {
  std::vector<SweepPoint> points;
  std::string model_id;
  std::string control;
  std::string metric_pair;
};

SweepCurve run_sweep(const model::LstmLmParams& m, const SweepSpec& spec,
                     const std::string& model_id = "model");

/// Trapezoidal integral of quality over diversity inside the window, with
/// linear interpolation at the window edges. Points are sorted internally;
/// failed (NaN) points are skipped.
double auc(const SweepCurve& curve, double diversity_lo, double diversity_hi);

struct BenchRow {
  std::string strategy;
  double control = 0.0;
  long n = 0;
  double seconds = 0.0;
  long tokens = 0;
  double acceptance_rate = 1.0;
};

/// Wall-clock comparison of decoding strategies at a fixed sample budget.
std::vector<BenchRow> bench_decoding(const model::LstmLmParams& m,
                                     const std::vector<decoding::DecoderConfig>& strategies,
                                     int n);

/// MLE phase followed by an adversarial phase on one model; the returned
/// trace carries the phase-switch step for the marker row in the CSV.
training::TrainTrace entropy_drop_trace(const model::LstmLmParams& init,
                                        const corpus::Corpus& train,
                                        const corpus::Corpus& valid,
                                        const training::TrainConfig& mle_cfg,
                                        const training::AdvConfig& adv_cfg,
                                        const training::ProgressFn& progress = {});

struct TempStudyRow {
  double alpha_train = 0.0;
  double neg_bleu = 0.0;
  double self_bleu = 0.0;
  long samples = 0;
  std::uint64_t seed = 0;
};

/// One model per training temperature (all else fixed), each evaluated at
/// inference alpha = 1 on (-BLEU-n, Self-BLEU-n).
std::vector<TempStudyRow> train_temp_study(const std::vector<double>& alpha_trains,
                                           model::Dims dims, const corpus::Corpus& train,
                                           const corpus::Corpus& valid,
                                           const corpus::Corpus& references,
                                           const training::TrainConfig& base, int bleu_n,
                                           int samples, int max_len, int fixed_len,
                                           const training::ProgressFn& progress = {});

// ---------------------------------------------------------------------------
// Synthetic-oracle experiment
// ---------------------------------------------------------------------------

struct SyntheticConfig {
  int oracle_vocab = 100;  // total vocabulary size including reserved ids
  std::uint64_t oracle_seed = 7;
  int seq_len = 20;
  int n_train = 10000;
  int n_valid = 1000;
  int n_test = 1000;
  model::Dims student_dims{100, 32, 32};
  training::TrainConfig mle;
  training::AdvConfig adv;
  std::vector<double> alpha_grid = default_alpha_grid();
  std::vector<double> table1_alphas = {1.0, 0.4, 0.001};
  int table1_samples = 2000;
  int samples_per_point = 2000;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  bool run_adversarial = true;
};

struct Table1Row {
  std::string model;
  double alpha = 0.0;
  double nll_oracle = 0.0;
  double se = 0.0;
  long samples = 0;
};

struct SyntheticSeedResult {
  std::uint64_t seed = 0;
  SweepCurve mle_curve, adv_curve;
  double window_lo = 0.0, window_hi = 0.0;
  double mle_auc = 0.0, adv_auc = 0.0;
  bool auc_valid = false;
  training::TrainTrace mle_trace, adv_trace;
};

struct SyntheticReport {
  std::vector<Table1Row> table1;
  std::vector<SyntheticSeedResult> per_seed;
};

/// End to end: build the oracle, sample its corpora, train MLE and
/// adversarial students per seed, sweep both in (NLL_oracle, NLL_test)
/// space and summarize with shared-window AUCs. Writes all artifacts under
/// out_dir when non-empty.
SyntheticReport run_synthetic_experiment(const SyntheticConfig& cfg, const std::string& out_dir,
                                         csv::TimingMode timing = csv::TimingMode::wall,
                                         const training::ProgressFn& progress = {});

// ---------------------------------------------------------------------------
// CSV artifacts (headers are part of the file-format contract)
// ---------------------------------------------------------------------------

inline constexpr const char* kCurveHeader =
    "control,quality,diversity,quality_se,diversity_se,seconds,samples,seed,flag";
inline constexpr const char* kTraceHeader = "step,phase,train_nll,valid_nll,seconds";
inline constexpr const char* kEvalHeader = "metric,n,value,samples,references,epsilon,seed";
inline constexpr const char* kBenchHeader = "strategy,control,n,seconds,tokens,acceptance_rate";
inline constexpr const char* kTable1Header = "model,alpha,nll_oracle,se,samples";
inline constexpr const char* kAucHeader = "model,window_lo,window_hi,auc";
inline constexpr const char* kTempStudyHeader = "alpha_train,neg_bleu,self_bleu,samples,seed";
inline constexpr const char* kGradCheckHeader = "block,max_rel_err,pass";

void write_curve_csv(const SweepCurve& curve, const std::string& path, csv::TimingMode timing);
SweepCurve read_curve_csv(const std::string& path);
void write_trace_csv(const training::TrainTrace& trace, const std::string& path,
                     csv::TimingMode timing);
void write_eval_csv(const std::vector<metrics::MetricReport>& reports, const std::string& path);
void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path,
                     csv::TimingMode timing);
void write_temp_study_csv(const std::vector<TempStudyRow>& rows, const std::string& path);
void write_gradcheck_csv(const training::GradCheckReport& report, const std::string& path);

}  // namespace qds::sweep
