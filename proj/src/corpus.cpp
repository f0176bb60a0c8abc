// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include "qdsweep/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "qdsweep/rng.hpp"

namespace qds::corpus {

namespace {

const std::array<std::string, kNumReserved> kReservedMarkers = {"<pad>", "<bos>", "<eos>",
                                                                "<unk>"};

bool is_reserved_marker(std::string_view tok) {
  for (const auto& m : kReservedMarkers) {
    if (tok == m) return true;
  }
  return false;
}

std::string escape_token(std::string_view tok) {
  if (is_reserved_marker(tok)) return "\\" + std::string(tok);
  return std::string(tok);
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    case Split::generated: return "generated";
  }
  return "unknown";
}

Vocab Vocab::build(const std::vector<std::string>& raw_lines, int max_size) {
  if (raw_lines.empty()) throw Error("empty corpus");
  if (max_size < 1) throw Error("build_vocab: max_size must be >= 1");

  std::unordered_map<std::string, long> counts;
  std::unordered_map<std::string, long> first_seen;
  long order = 0;
  bool any_token = false;
  for (const auto& line : raw_lines) {
    for (auto& tok : tokenize(line)) {
      any_token = true;
      std::string t = escape_token(tok);
      auto [it, inserted] = counts.try_emplace(std::move(t), 0);
      if (inserted) first_seen[it->first] = order++;
      ++it->second;
    }
  }
  if (!any_token) throw Error("empty corpus");

  std::vector<const std::string*> by_rank;
  by_rank.reserve(counts.size());
  for (const auto& [tok, _] : counts) by_rank.push_back(&tok);
  std::sort(by_rank.begin(), by_rank.end(), [&](const std::string* a, const std::string* b) {
    const long ca = counts.at(*a), cb = counts.at(*b);
    if (ca != cb) return ca > cb;
    return first_seen.at(*a) < first_seen.at(*b);
  });
  if (static_cast<int>(by_rank.size()) > max_size) by_rank.resize(max_size);

  std::vector<std::string> kept;
  kept.reserve(by_rank.size());
  for (const std::string* t : by_rank) kept.push_back(*t);
  return from_tokens(std::move(kept));
}

Vocab Vocab::from_tokens(std::vector<std::string> content_tokens) {
  Vocab v;
  v.tokens_ = std::move(content_tokens);
  v.ids_.reserve(v.tokens_.size());
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    auto [_, inserted] = v.ids_.emplace(v.tokens_[i], static_cast<int>(i) + kNumReserved);
    if (!inserted) throw Error("vocab: duplicate token '" + v.tokens_[i] + "'");
  }
  return v;
}

Vocab Vocab::synthetic(int total_size) {
  if (total_size < kNumReserved + 1) throw Error("vocab: size must be >= 5");
  std::vector<std::string> toks;
  toks.reserve(total_size - kNumReserved);
  for (int id = kNumReserved; id < total_size; ++id) toks.push_back("t" + std::to_string(id));
  return from_tokens(std::move(toks));
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("vocab: cannot open '" + path + "'");
  std::vector<std::string> toks;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw Error("vocab: empty line in '" + path + "'");
    toks.push_back(line);
  }
  return from_tokens(std::move(toks));
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("vocab: cannot write '" + path + "'");
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw Error("vocab: write failed for '" + path + "'");
}

int Vocab::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw Error("vocab: id out of range");
  if (id < kNumReserved) return kReservedMarkers[id];
  return tokens_[id - kNumReserved];
}

bool Vocab::contains(std::string_view token) const {
  return ids_.find(std::string(token)) != ids_.end();
}

void validate_sentence(const Vocab& v, const Sentence& s, int max_len) {
  if (s.ids.size() < 2) throw Error("sentence: must have at least one content token and EOS");
  if (s.ids.back() != kEos) throw Error("sentence: missing final EOS");
  if (s.content_len() > max_len)
    throw Error("sentence: length " + std::to_string(s.content_len()) + " exceeds max_len " +
                std::to_string(max_len));
  for (std::size_t i = 0; i + 1 < s.ids.size(); ++i) {
    const int id = s.ids[i];
    if (id == kPad || id == kBos || id == kEos)
      throw Error("sentence: reserved id " + std::to_string(id) + " inside sentence");
    if (id < 0 || id >= v.size()) throw Error("sentence: id out of vocab range");
  }
}

Vocab build_vocab(const std::vector<std::string>& raw_lines, int max_size) {
  return Vocab::build(raw_lines, max_size);
}

Sentence encode(const Vocab& v, std::string_view line, int max_len) {
  Sentence s;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) {
      std::string_view tok = line.substr(i, j - i);
      s.ids.push_back(is_reserved_marker(tok) ? v.id_of("\\" + std::string(tok))
                                              : v.id_of(tok));
    }
    i = j;
  }
  if (s.ids.empty()) throw Error("encode: empty line");
  if (static_cast<int>(s.ids.size()) > max_len)
    throw Error("encode: line of " + std::to_string(s.ids.size()) + " tokens exceeds max_len " +
                std::to_string(max_len));
  s.ids.push_back(kEos);
  return s;
}

std::string decode(const Vocab& v, const Sentence& s) {
  validate_sentence(v, s, std::max(s.content_len(), 1));
  std::string out;
  for (int i = 0; i < s.content_len(); ++i) {
    if (i) out += ' ';
    out += v.token(s.ids[i]);
  }
  return out;
}

Corpus load_corpus(const std::string& path, std::shared_ptr<const Vocab> vocab, int max_len) {
  if (!vocab) throw Error("load_corpus: null vocab");
  std::ifstream in(path);
  if (!in) throw Error("load_corpus: cannot open '" + path + "'");
  Corpus c;
  c.vocab = std::move(vocab);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      c.sentences.push_back(encode(*c.vocab, line, max_len));
    } catch (const Error& e) {
      throw Error("load_corpus: '" + path + "' line " + std::to_string(line_no) + ": " +
                  e.what());
    }
  }
  if (c.sentences.empty()) throw Error("load_corpus: '" + path + "' is empty");
  return c;
}

void save_corpus(const Corpus& c, const std::string& path) {
  if (!c.vocab) throw Error("save_corpus: corpus has no vocab");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_corpus: cannot write '" + path + "'");
  for (const auto& s : c.sentences) out << decode(*c.vocab, s) << '\n';
  if (!out) throw Error("save_corpus: write failed for '" + path + "'");
}

std::array<Corpus, 3> split_corpus(const Corpus& c, double f_train, double f_valid,
                                   double f_test, std::uint64_t seed) {
  if (f_train <= 0 || f_valid <= 0 || f_test <= 0)
    throw Error("split_corpus: fractions must be positive");
  if (std::abs(f_train + f_valid + f_test - 1.0) > 1e-9)
    throw Error("split_corpus: fractions must sum to 1");

  const int n = c.size();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  RandomStream rs(mix_seed(seed, 0x5114ULL));
  rs.shuffle(order);

  const int n_train = static_cast<int>(std::llround(f_train * n));
  const int n_valid = static_cast<int>(std::llround(f_valid * n));
  const int n_test = n - n_train - n_valid;
  if (n_train <= 0 || n_valid <= 0 || n_test <= 0)
    throw Error("split_corpus: a split came out empty");

  std::array<Corpus, 3> out;
  const Split tags[3] = {Split::train, Split::valid, Split::test};
  const int sizes[3] = {n_train, n_valid, n_test};
  int pos = 0;
  for (int k = 0; k < 3; ++k) {
    out[k].vocab = c.vocab;
    out[k].split = tags[k];
    out[k].sentences.reserve(sizes[k]);
    for (int i = 0; i < sizes[k]; ++i) out[k].sentences.push_back(c.sentences[order[pos++]]);
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace qds::corpus
