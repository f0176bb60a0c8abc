// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include "qdsweep/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "qdsweep/rng.hpp"

namespace qds::model {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_normal(Eigen::MatrixXd& m, RandomStream& rs, double scale) {
  // Row-major fill so the on-disk block layout matches the draw order.
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rs.normal();
}

void fill_normal(Eigen::VectorXd& v, RandomStream& rs, double scale) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = scale * rs.normal();
}

void check_dims(const Dims& d) {
  if (d.vocab_size < corpus::kNumReserved + 1)
    throw Error("model: vocab_size must be >= 5");
  if (d.embed_dim < 1 || d.hidden_dim < 1)
    throw Error("model: embed_dim and hidden_dim must be positive");
}

template <class P>
void alloc_lstm(P& p, const Dims& d) {
  const int in = d.embed_dim + d.hidden_dim;
  p.embedding.resize(d.vocab_size, d.embed_dim);
  p.w_in.resize(d.hidden_dim, in);
  p.w_forget.resize(d.hidden_dim, in);
  p.w_cell.resize(d.hidden_dim, in);
  p.w_out.resize(d.hidden_dim, in);
  p.b_in.resize(d.hidden_dim);
  p.b_forget.resize(d.hidden_dim);
  p.b_cell.resize(d.hidden_dim);
  p.b_out.resize(d.hidden_dim);
}

template <class P>
detail::StepCache lstm_step_impl(const P& p, const Eigen::VectorXd& h_prev,
                                 const Eigen::VectorXd& c_prev, int token) {
  if (token < 0 || token >= p.dims.vocab_size) throw Error("forward_step: token id out of range");
  detail::StepCache s;
  s.token = token;
  s.z.resize(p.dims.embed_dim + p.dims.hidden_dim);
  s.z.head(p.dims.embed_dim) = p.embedding.row(token).transpose();
  s.z.tail(p.dims.hidden_dim) = h_prev;
  s.c_prev = c_prev;

  s.gi = (p.w_in * s.z + p.b_in).unaryExpr([](double x) { return sigmoid(x); });
  s.gf = (p.w_forget * s.z + p.b_forget).unaryExpr([](double x) { return sigmoid(x); });
  s.gc = (p.w_cell * s.z + p.b_cell).array().tanh();
  s.go = (p.w_out * s.z + p.b_out).unaryExpr([](double x) { return sigmoid(x); });
  s.c = s.gf.cwiseProduct(c_prev) + s.gi.cwiseProduct(s.gc);
  s.tanh_c = s.c.array().tanh();
  s.h = s.go.cwiseProduct(s.tanh_c);
  if (!s.h.allFinite() || !s.c.allFinite()) throw Error("numerical overflow");
  return s;
}

}  // namespace

namespace detail {

StepCache lstm_step(const LstmLmParams& p, const Eigen::VectorXd& h_prev,
                    const Eigen::VectorXd& c_prev, int token) {
  return lstm_step_impl(p, h_prev, c_prev, token);
}

StepCache lstm_step(const DiscriminatorParams& p, const Eigen::VectorXd& h_prev,
                    const Eigen::VectorXd& c_prev, int token) {
  return lstm_step_impl(p, h_prev, c_prev, token);
}

Eigen::VectorXd pre_logit(const LstmLmParams& p, const Eigen::VectorXd& h) {
  if (!p.has_proj()) return h;
  return p.proj * h + p.b_proj;
}

}  // namespace detail

LstmLmParams init_params(Dims dims, std::uint64_t seed, double scale) {
  check_dims(dims);
  if (!(scale > 0.0)) throw Error("init_params: scale must be > 0 (degenerate model)");
  LstmLmParams p;
  p.dims = dims;
  p.seed = seed;
  alloc_lstm(p, dims);
  if (dims.embed_dim != dims.hidden_dim) {
    p.proj.resize(dims.embed_dim, dims.hidden_dim);
    p.b_proj.resize(dims.embed_dim);
  }
  RandomStream rs(mix_seed(seed, 0x10dE1ULL));
  visit_blocks(p, [&](const char*, auto& block) { fill_normal(block, rs, scale); });
  return p;
}

LstmLmParams make_oracle(int vocab_size, std::uint64_t seed) {
  LstmLmParams p = init_params({vocab_size, 32, 32}, seed, 1.0);
  p.oracle = true;
  return p;
}

DiscriminatorParams init_discriminator(Dims dims, std::uint64_t seed, double scale) {
  check_dims(dims);
  if (!(scale > 0.0)) throw Error("init_discriminator: scale must be > 0");
  DiscriminatorParams p;
  p.dims = dims;
  p.seed = seed;
  alloc_lstm(p, dims);
  p.head_w.resize(dims.hidden_dim);
  p.head_b.resize(1);
  RandomStream rs(mix_seed(seed, 0xD15CULL));
  visit_disc_blocks(p, [&](const char*, auto& block) { fill_normal(block, rs, scale); });
  return p;
}

std::pair<RnnState, Eigen::VectorXd> forward_step(const LstmLmParams& p, const RnnState& state,
                                                  int token_id) {
  auto cache = detail::lstm_step(p, state.h, state.c, token_id);
  Eigen::VectorXd logits = p.embedding * detail::pre_logit(p, cache.h);
  return {RnnState{std::move(cache.h), std::move(cache.c)}, std::move(logits)};
}

Eigen::VectorXd conditional_dist(const Eigen::VectorXd& logits, double alpha) {
  if (alpha < 0.0) throw Error("conditional_dist: alpha must be >= 0");
  const Eigen::Index n = logits.size();
  if (n == 0) throw Error("conditional_dist: empty logits");
  Eigen::VectorXd out(n);
  if (alpha == 0.0) {
    // Limit distribution: one-hot at the argmax, lowest index on ties.
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (logits(i) > logits(best)) best = i;
    out.setZero();
    out(best) = 1.0;
    return out;
  }
  Eigen::VectorXd scaled = logits / alpha;
  const double m = scaled.maxCoeff();
  if (!std::isfinite(m)) throw Error("conditional_dist: no finite logit");
  // Scalar exp: Eigen's packet exp maps -inf to a denormal, not to 0, and
  // masked entries must carry exactly zero probability.
  out = (scaled.array() - m).unaryExpr([](double x) { return std::exp(x); });
  out /= out.sum();
  return out;
}

Eigen::VectorXd log_conditional(const Eigen::VectorXd& logits, double alpha) {
  if (!(alpha > 0.0)) throw Error("log_conditional: alpha must be > 0");
  Eigen::VectorXd scaled = logits / alpha;
  const double m = scaled.maxCoeff();
  if (!std::isfinite(m)) throw Error("log_conditional: no finite logit");
  const double lse =
      m + std::log((scaled.array() - m)
                       .unaryExpr([](double x) { return std::exp(x); })
                       .sum());
  return scaled.array() - lse;
}

double entropy(const Eigen::VectorXd& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs(i);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

void apply_sample_mask(Eigen::VectorXd& logits, bool allow_eos) {
  logits(corpus::kPad) = kNegInf;
  logits(corpus::kBos) = kNegInf;
  logits(corpus::kUnk) = kNegInf;
  if (!allow_eos) logits(corpus::kEos) = kNegInf;
}

std::vector<double> step_log_probs(const LstmLmParams& p, const corpus::Sentence& s,
                                   double alpha) {
  if (!(alpha > 0.0)) throw Error("sequence_nll: alpha must be > 0");
  if (s.ids.size() < 2 || s.ids.back() != corpus::kEos)
    throw Error("sequence_nll: malformed sentence");
  std::vector<double> lps;
  lps.reserve(s.ids.size());
  RnnState state = RnnState::zero(p.dims.hidden_dim);
  int input = corpus::kBos;
  for (std::size_t t = 0; t < s.ids.size(); ++t) {
    std::pair<RnnState, Eigen::VectorXd> step;
    try {
      step = forward_step(p, state, input);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " at step " + std::to_string(t));
    }
    const int target = s.ids[t];
    if (target < 0 || target >= p.dims.vocab_size)
      throw Error("sequence_nll: token id out of range");
    lps.push_back(log_conditional(step.second, alpha)(target));
    state = std::move(step.first);
    input = target;
  }
  return lps;
}

double sequence_nll(const LstmLmParams& p, const corpus::Sentence& s, double alpha) {
  const auto lps = step_log_probs(p, s, alpha);
  double total = 0.0;
  for (double lp : lps) total += lp;
  return -total / static_cast<double>(lps.size());
}

double discriminate(const DiscriminatorParams& d, const corpus::Sentence& s) {
  if (s.ids.size() < 2 || s.ids.back() != corpus::kEos)
    throw Error("discriminate: malformed sentence");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(d.dims.hidden_dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d.dims.hidden_dim);
  auto feed = [&](int token) {
    auto cache = detail::lstm_step(d, h, c, token);
    h = std::move(cache.h);
    c = std::move(cache.c);
  };
  feed(corpus::kBos);
  for (int id : s.ids) {
    if (id < 0 || id >= d.dims.vocab_size) throw Error("discriminate: token id out of range");
    feed(id);
  }
  return sigmoid(d.head_w.dot(h) + d.head_b(0));
}

// ---------------------------------------------------------------------------
// Serialization: "QDSM" magic, version, kind, dims header, then named
// row-major f64 blocks. Round trips are bit-exact.
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kMagic = 0x4d534451;  // "QDSM" little-endian
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindLm = 0;
constexpr std::uint32_t kKindDisc = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw Error(std::string("model file: truncated reading ") + what);
  return v;
}
std::uint64_t read_u64(std::istream& in, const char* what) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw Error(std::string("model file: truncated reading ") + what);
  return v;
}

void write_block(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
  const std::uint32_t len = static_cast<std::uint32_t>(std::strlen(name));
  write_u32(out, len);
  out.write(name, len);
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

void write_block(std::ostream& out, const char* name, const Eigen::VectorXd& v) {
  Eigen::MatrixXd m = v;
  write_block(out, name, m);
}

void read_block(std::istream& in, const char* name, Eigen::Index rows, Eigen::Index cols,
                Eigen::MatrixXd* mat, Eigen::VectorXd* vec) {
  const std::uint32_t len = read_u32(in, "block name length");
  std::string got(len, '\0');
  if (!in.read(got.data(), len)) throw Error("model file: truncated block name");
  if (got != name) throw Error("model file: expected block '" + std::string(name) + "', found '" + got + "'");
  const std::uint32_t r = read_u32(in, "block rows");
  const std::uint32_t c = read_u32(in, "block cols");
  if (static_cast<Eigen::Index>(r) != rows || static_cast<Eigen::Index>(c) != cols)
    throw Error("model file: shape mismatch in block '" + got + "'");
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  if (!in.read(reinterpret_cast<char*>(data.data()), data.size() * sizeof(double)))
    throw Error("model file: truncated block '" + got + "'");
  if (mat) {
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) (*mat)(i, j) = data[k++];
  } else {
    for (Eigen::Index i = 0; i < rows; ++i) (*vec)(i) = data[i];
  }
}

template <class Params, class Visit>
void save_impl(const Params& p, const std::string& path, std::uint32_t kind,
               std::uint32_t flags, Visit&& visit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save: cannot write '" + path + "'");
  write_u32(out, kMagic);
  write_u32(out, kVersion);
  write_u32(out, kind);
  write_u32(out, static_cast<std::uint32_t>(p.dims.vocab_size));
  write_u32(out, static_cast<std::uint32_t>(p.dims.embed_dim));
  write_u32(out, static_cast<std::uint32_t>(p.dims.hidden_dim));
  write_u32(out, flags);
  write_u64(out, p.seed);
  visit([&](const char* name, const auto& block) { write_block(out, name, block); });
  if (!out) throw Error("save: write failed for '" + path + "'");
}

struct Header {
  std::uint32_t kind = 0, flags = 0;
  Dims dims;
  std::uint64_t seed = 0;
};

Header read_header(std::istream& in, const std::string& path, std::uint32_t expect_kind) {
  if (read_u32(in, "magic") != kMagic) throw Error("model file: bad magic in '" + path + "'");
  const std::uint32_t version = read_u32(in, "version");
  if (version != kVersion)
    throw Error("model file: unsupported version " + std::to_string(version) + " in '" + path +
                "'");
  Header h;
  h.kind = read_u32(in, "kind");
  if (h.kind != expect_kind) throw Error("model file: wrong model kind in '" + path + "'");
  h.dims.vocab_size = static_cast<int>(read_u32(in, "vocab_size"));
  h.dims.embed_dim = static_cast<int>(read_u32(in, "embed_dim"));
  h.dims.hidden_dim = static_cast<int>(read_u32(in, "hidden_dim"));
  h.flags = read_u32(in, "flags");
  h.seed = read_u64(in, "seed");
  check_dims(h.dims);
  return h;
}

}  // namespace

void save_params(const LstmLmParams& p, const std::string& path) {
  save_impl(p, path, kKindLm, p.oracle ? 1u : 0u,
            [&](auto&& f) { visit_blocks(p, f); });
}

LstmLmParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load: cannot open '" + path + "'");
  const Header h = read_header(in, path, kKindLm);
  LstmLmParams p;
  p.dims = h.dims;
  p.seed = h.seed;
  p.oracle = (h.flags & 1u) != 0;
  alloc_lstm(p, h.dims);
  if (p.has_proj()) {
    p.proj.resize(h.dims.embed_dim, h.dims.hidden_dim);
    p.b_proj.resize(h.dims.embed_dim);
  }
  visit_blocks(p, [&](const char* name, auto& block) {
    if constexpr (std::is_same_v<std::decay_t<decltype(block)>, Eigen::VectorXd>) {
      read_block(in, name, block.size(), 1, nullptr, &block);
    } else {
      read_block(in, name, block.rows(), block.cols(), &block, nullptr);
    }
  });
  return p;
}

void save_discriminator(const DiscriminatorParams& p, const std::string& path) {
  save_impl(p, path, kKindDisc, 0, [&](auto&& f) { visit_disc_blocks(p, f); });
}

DiscriminatorParams load_discriminator(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load: cannot open '" + path + "'");
  const Header h = read_header(in, path, kKindDisc);
  DiscriminatorParams p;
  p.dims = h.dims;
  p.seed = h.seed;
  alloc_lstm(p, h.dims);
  p.head_w.resize(h.dims.hidden_dim);
  p.head_b.resize(1);
  visit_disc_blocks(p, [&](const char* name, auto& block) {
    if constexpr (std::is_same_v<std::decay_t<decltype(block)>, Eigen::VectorXd>) {
      read_block(in, name, block.size(), 1, nullptr, &block);
    } else {
      read_block(in, name, block.rows(), block.cols(), &block, nullptr);
    }
  });
  return p;
}

}  // namespace qds::model
