// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "qdsweep/corpus.hpp"

using namespace qds;
using namespace qds::corpus;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("build_vocab assigns ids by frequency") {
  const Vocab v = build_vocab({"a b a"}, 10);
  CHECK(v.size() == 6);
  CHECK(v.id_of("a") == 4);
  CHECK(v.id_of("b") == 5);
}

TEST_CASE("build_vocab breaks frequency ties by first occurrence") {
  const Vocab v = build_vocab({"a b", "c d"}, 2);
  CHECK(v.size() == 6);
  CHECK(v.contains("a"));
  CHECK(v.contains("b"));
  CHECK(!v.contains("c"));
  CHECK(v.id_of("c") == kUnk);
}

TEST_CASE("build_vocab truncation matches a brute-force frequency table") {
  // 1000 distinct tokens, frequency of w_i = (i % 7) + 1, truncate to 100.
  std::vector<std::string> lines;
  for (int i = 0; i < 1000; ++i) {
    std::string line;
    for (int k = 0; k < (i % 7) + 1; ++k) line += "w" + std::to_string(i) + " ";
    lines.push_back(line);
  }
  const Vocab v = build_vocab(lines, 100);
  CHECK(v.size() == 104);

  // Independent tally: count, then sort by (count desc, first occurrence).
  std::map<std::string, long> counts;
  std::vector<std::string> order;
  for (const auto& line : lines) {
    std::string tok;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ' ') {
        if (!tok.empty()) {
          if (!counts.count(tok)) order.push_back(tok);
          ++counts[tok];
          tok.clear();
        }
      } else {
        tok += line[i];
      }
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    return counts[a] > counts[b];
  });
  for (int i = 0; i < 100; ++i) CHECK(v.contains(order[i]));
  for (int i = 100; i < 1000; ++i) CHECK(v.id_of(order[i]) == kUnk);
}

TEST_CASE("build_vocab rejects empty input") {
  CHECK_THROWS_WITH_AS(build_vocab({}, 5), "empty corpus", Error);
  CHECK_THROWS_AS(build_vocab({"", "  "}, 5), Error);
}

TEST_CASE("encode and decode round trip") {
  const Vocab v = build_vocab({"the cat sat on the mat"}, 100);
  const Sentence s = encode(v, "the cat sat");
  CHECK(s.ids.size() == 4);
  CHECK(s.ids.back() == kEos);
  CHECK(decode(v, s) == "the cat sat");
}

TEST_CASE("encode substitutes UNK and decode marks it") {
  const Vocab v = build_vocab({"a b"}, 10);
  const Sentence s = encode(v, "a zzz b");
  CHECK(s.ids == std::vector<int>{4, kUnk, 5, kEos});
  CHECK(decode(v, s) == "a <unk> b");
}

TEST_CASE("encode rejects empty lines") {
  const Vocab v = build_vocab({"a"}, 10);
  CHECK_THROWS_AS(encode(v, ""), Error);
  CHECK_THROWS_AS(encode(v, "   "), Error);
}

TEST_CASE("raw reserved markers are escaped, never reserved ids") {
  const Vocab v = build_vocab({"<unk> <eos> x"}, 10);
  const Sentence s = encode(v, "<unk> x");
  for (std::size_t i = 0; i + 1 < s.ids.size(); ++i) CHECK(s.ids[i] >= kNumReserved);
  CHECK(decode(v, s) == "\\<unk> x");
}

TEST_CASE("corpus save/load is the identity on token streams") {
  auto vocab = std::make_shared<Vocab>(build_vocab({"a b c d e f"}, 100));
  const auto path = temp_path("qds_corpus_roundtrip.txt");
  {
    std::ofstream out(path);
    out << "a b c\nd e\nf f f\n";
  }
  const Corpus c = load_corpus(path, vocab);
  CHECK(c.size() == 3);
  CHECK(c.sentences[0].ids == std::vector<int>{4, 5, 6, kEos});

  const auto path2 = temp_path("qds_corpus_roundtrip2.txt");
  save_corpus(c, path2);
  const Corpus c2 = load_corpus(path2, vocab);
  REQUIRE(c2.size() == c.size());
  for (int i = 0; i < c.size(); ++i) CHECK(c2.sentences[i].ids == c.sentences[i].ids);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("load_corpus reports the offending line for over-long sentences") {
  auto vocab = std::make_shared<Vocab>(build_vocab({"a"}, 10));
  const auto path = temp_path("qds_corpus_longline.txt");
  {
    std::ofstream out(path);
    out << "a a\n";
    for (int i = 0; i < 300; ++i) out << "a ";
    out << "\n";
  }
  CHECK_THROWS_WITH_AS(load_corpus(path, vocab, 250),
                       doctest::Contains("line 2"), Error);
  std::remove(path.c_str());
}

TEST_CASE("split_corpus partitions deterministically") {
  auto vocab = testutil::synthetic_vocab(20);
  std::vector<std::string> lines;
  for (int i = 0; i < 10; ++i) lines.push_back("t" + std::to_string(4 + i));
  const Corpus c = testutil::corpus_from_lines(vocab, lines);

  const auto parts = split_corpus(c, 0.8, 0.1, 0.1, 42);
  CHECK(parts[0].size() == 8);
  CHECK(parts[1].size() == 1);
  CHECK(parts[2].size() == 1);

  const auto parts2 = split_corpus(c, 0.8, 0.1, 0.1, 42);
  for (int k = 0; k < 3; ++k) {
    REQUIRE(parts2[k].size() == parts[k].size());
    for (int i = 0; i < parts[k].size(); ++i)
      CHECK(parts2[k].sentences[i].ids == parts[k].sentences[i].ids);
  }

  // Union of the splits is the original multiset.
  std::multiset<std::vector<int>> original, recombined;
  for (const auto& s : c.sentences) original.insert(s.ids);
  for (const auto& part : parts)
    for (const auto& s : part.sentences) recombined.insert(s.ids);
  CHECK(original == recombined);
}

TEST_CASE("split_corpus rejects bad fractions") {
  auto vocab = testutil::synthetic_vocab(10);
  const Corpus c = testutil::corpus_from_lines(vocab, {"t4", "t5", "t6"});
  CHECK_THROWS_AS(split_corpus(c, 0.5, 0.25, 0.3, 1), Error);  // sums to 1.05
  CHECK_THROWS_AS(split_corpus(c, 0.98, 0.01, 0.01, 1), Error);  // empty split
}

TEST_CASE("vocab save/load round trip") {
  const Vocab v = build_vocab({"delta alpha beta alpha delta delta"}, 100);
  const auto path = temp_path("qds_vocab.txt");
  v.save(path);
  const Vocab v2 = Vocab::load(path);
  CHECK(v2.size() == v.size());
  for (int id = kNumReserved; id < v.size(); ++id) CHECK(v2.token(id) == v.token(id));
  std::remove(path.c_str());
}

TEST_CASE("round trip property on random in-vocab lines") {
  auto vocab = testutil::synthetic_vocab(30);
  RandomStream rs(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::string line;
    const int len = 1 + static_cast<int>(rs.below(12));
    for (int i = 0; i < len; ++i) {
      if (i) line += ' ';
      line += vocab->token(kNumReserved + static_cast<int>(rs.below(26)));
    }
    CHECK(decode(*vocab, encode(*vocab, line)) == line);
  }
}
