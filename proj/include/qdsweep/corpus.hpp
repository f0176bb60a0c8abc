// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qdsweep/error.hpp"

namespace qds::corpus {

// Reserved token ids. Files never contain them; sentences end with exactly
// one EOS and may contain UNK but never PAD or BOS.
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kNumReserved = 4;

inline constexpr int kDefaultMaxLen = 52;

/// Token vocabulary. Content tokens get ids 4.. in frequency order;
/// reserved ids 0..3 are fixed and never produced from raw text.
class Vocab {
 public:
  /// Most frequent `max_size` whitespace tokens, ties broken by first
  /// occurrence. Raw tokens colliding with reserved markers are escaped
  /// with a leading backslash.
  static Vocab build(const std::vector<std::string>& raw_lines, int max_size);

  /// Vocabulary from an explicit content-token list (ids assigned in order).
  static Vocab from_tokens(std::vector<std::string> content_tokens);

  /// Synthetic vocabulary of `total_size - 4` generated content tokens
  /// ("t4", "t5", ...). Used by the oracle task.
  static Vocab synthetic(int total_size);

  static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  int size() const { return static_cast<int>(tokens_.size()) + kNumReserved; }

  /// Content-token lookup; unknown tokens map to kUnk.
  int id_of(std::string_view token) const;

  /// Token string for any valid id; reserved ids yield their markers.
  const std::string& token(int id) const;

  bool contains(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;  // id = index + kNumReserved
  std::unordered_map<std::string, int> ids_;
};

/// Content token ids followed by exactly one EOS.
struct Sentence {
  std::vector<int> ids;

  int content_len() const { return static_cast<int>(ids.size()) - 1; }
  bool operator==(const Sentence&) const = default;
};

enum class Split { train, valid, test, generated };

std::string_view split_name(Split s);

struct Corpus {
  std::vector<Sentence> sentences;
  std::shared_ptr<const Vocab> vocab;
  Split split = Split::train;

  int size() const { return static_cast<int>(sentences.size()); }
};

/// Throws unless `s` is well-formed under `v` (final EOS, no PAD/BOS/extra
/// EOS inside, ids below vocab size, 1 <= content length <= max_len).
void validate_sentence(const Vocab& v, const Sentence& s, int max_len = kDefaultMaxLen);

Vocab build_vocab(const std::vector<std::string>& raw_lines, int max_size);

Sentence encode(const Vocab& v, std::string_view line, int max_len = kDefaultMaxLen);
std::string decode(const Vocab& v, const Sentence& s);

Corpus load_corpus(const std::string& path, std::shared_ptr<const Vocab> vocab,
                   int max_len = kDefaultMaxLen);
void save_corpus(const Corpus& c, const std::string& path);

/// Deterministic shuffled partition; fractions must be positive and sum
/// to 1, and every split must come out nonempty.
std::array<Corpus, 3> split_corpus(const Corpus& c, double f_train, double f_valid,
                                   double f_test, std::uint64_t seed);

/// Reads all lines of a text file (used for vocab construction).
std::vector<std::string> read_lines(const std::string& path);

}  // namespace qds::corpus
