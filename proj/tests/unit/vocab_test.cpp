// Copyright 2026 The VTT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vtt/vocab.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support/temp_dir.hpp"

namespace vtt {
namespace {

const std::string kFixtureVocab = std::string(VTT_TEST_DATA) + "/fixture_vocab.tsv";

TEST(VocabTest, BytePieceText) {
  EXPECT_EQ(byte_piece_text(0x00), "<0x00>");
  EXPECT_EQ(byte_piece_text(0xE3), "<0xE3>");
  EXPECT_EQ(parse_byte_piece("<0xE3>"), std::uint8_t{0xE3});
  EXPECT_FALSE(parse_byte_piece("<0xe3>"));
  EXPECT_FALSE(parse_byte_piece("<0xE3"));
  EXPECT_FALSE(parse_byte_piece("0xE3>>"));
}

TEST(VocabTest, MakeVocabLayout) {
  const Vocabulary v = make_vocab({{"\xE2\x96\x81" "a", -1.0}, {"b", -2.0}});
  EXPECT_EQ(v.size(), 4u + 256u + 2u);
  EXPECT_TRUE(v.byte_fallback());
  EXPECT_EQ(v.special_id("unk"), 0);
  EXPECT_EQ(v.special_id("bos"), 1);
  EXPECT_EQ(v.special_id("eos"), 2);
  EXPECT_EQ(v.special_id("pad"), 3);
  EXPECT_EQ(v.byte_id(0x41), 4 + 0x41);
  EXPECT_EQ(v.find_normal("b"), 261);
  EXPECT_FALSE(v.find_normal("<0x41>"));
  EXPECT_EQ(v.max_piece_chars(), 2u);

  const Vocabulary nb = make_vocab({{"a", -1.0}}, false);
  EXPECT_FALSE(nb.byte_fallback());
  EXPECT_FALSE(nb.byte_id(0));
}

TEST(VocabTest, RejectsDuplicatesAndBadBytePieces) {
  EXPECT_THROW(make_vocab({{"a", -1.0}, {"a", -2.0}}), ValidationError);
  EXPECT_THROW(Vocabulary({{"<0xZZ>", -1.0, PieceKind::ByteFallback}}), ValidationError);
  EXPECT_THROW(Vocabulary({{"a\tb", -1.0, PieceKind::Normal}}), ValidationError);
  EXPECT_THROW(Vocabulary({{"", -1.0, PieceKind::Normal}}), ValidationError);
}

TEST(VocabTest, FixtureVocabularyLoads) {
  const Vocabulary v = load_vocab(kFixtureVocab);
  EXPECT_EQ(v.size(), 300u);
  EXPECT_TRUE(v.byte_fallback());
  EXPECT_NEAR(probability_mass(v), 1.0, 1e-6);
}

TEST(VocabTest, RoundTripIsExact) {
  const Vocabulary v = load_vocab(kFixtureVocab);
  testing::TempDir dir;
  save_vocab(v, dir / "copy.tsv");
  const Vocabulary back = load_vocab(dir / "copy.tsv");
  EXPECT_EQ(back, v);
  EXPECT_EQ(vocab_to_string(back), vocab_to_string(v));
}

TEST(VocabTest, RoundTripPreservesFullPrecisionProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lp(-40.0, 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, double>> normal;
    for (int k = 0; k < 40; ++k) normal.emplace_back("p" + std::to_string(trial) + "_" + std::to_string(k), lp(rng));
    const Vocabulary v = make_vocab(normal, trial % 2 == 0, lp(rng));
    EXPECT_EQ(vocab_from_string(vocab_to_string(v)), v);
  }
}

TEST(VocabTest, DuplicatePieceReportsSecondOccurrence) {
  const std::string tsv =
      "#vtt-vocab v1 size=3 byte_fallback=0\n"
      "a\t-1\tnormal\n"
      "b\t-2\tnormal\n"
      "a\t-3\tnormal\n";
  try {
    vocab_from_string(tsv);
    FAIL() << "duplicate accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(VocabTest, MalformedInputs) {
  auto line_of = [](const std::string& tsv) -> std::size_t {
    try {
      vocab_from_string(tsv);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(""), 1u);
  EXPECT_EQ(line_of("#vtt-vocab v2 size=0 byte_fallback=0\n"), 1u);
  EXPECT_EQ(line_of("#vtt-vocab v1 size=x byte_fallback=0\n"), 1u);
  EXPECT_EQ(line_of("#vtt-vocab v1 size=1 byte_fallback=0\na -1 normal\n"), 2u);
  EXPECT_EQ(line_of("#vtt-vocab v1 size=1 byte_fallback=0\na\tnope\tnormal\n"), 2u);
  EXPECT_EQ(line_of("#vtt-vocab v1 size=1 byte_fallback=0\na\t-1\tweird\n"), 2u);
  EXPECT_EQ(line_of("#vtt-vocab v1 size=2 byte_fallback=0\na\t-1\tnormal\n"), 2u);  // non-dense: size mismatch
  EXPECT_EQ(line_of("#vtt-vocab v1 size=1 byte_fallback=1\na\t-1\tnormal\n"), 1u);  // flag disagrees
  EXPECT_EQ(line_of("#vtt-vocab v1 size=1 byte_fallback=0\n<0x4>\t-1\tbyte\n"), 2u);
}

TEST(VocabTest, NormalizeLogProbsIgnoresSpecials) {
  std::vector<Piece> pieces = special_pieces();
  pieces.push_back({"a", std::log(3.0), PieceKind::Normal});
  pieces.push_back({"b", std::log(1.0), PieceKind::Normal});
  normalize_log_probs(pieces);
  EXPECT_DOUBLE_EQ(pieces[0].log_prob, 0.0);
  EXPECT_NEAR(std::exp(pieces[4].log_prob), 0.75, 1e-15);
  EXPECT_NEAR(std::exp(pieces[5].log_prob), 0.25, 1e-15);
}

TEST(VocabTest, TruncationIsNestedAndKeepsCharacters) {
  const Vocabulary v = load_vocab(kFixtureVocab);
  const Vocabulary mid = truncate_vocab(v, 295);
  const Vocabulary small = truncate_vocab(v, 292);
  EXPECT_EQ(mid.size(), 295u);
  EXPECT_EQ(small.size(), 292u);
  for (const auto& p : small.pieces()) EXPECT_TRUE(mid.find(p.text)) << p.text;
  for (const auto& p : mid.pieces()) EXPECT_TRUE(v.find(p.text)) << p.text;
  for (const auto& p : v.pieces())
    if (p.kind == PieceKind::Normal && utf8::char_count(p.text) == 1) {
      EXPECT_TRUE(small.find(p.text)) << p.text;
    }
  EXPECT_NEAR(probability_mass(small), 1.0, 1e-9);
  EXPECT_THROW(truncate_vocab(v, 10), ConfigError);
  EXPECT_THROW(truncate_vocab(v, 301), ConfigError);
}

TEST(VocabTest, FingerprintTracksContent) {
  const Vocabulary a = make_vocab({{"a", -1.0}});
  const Vocabulary b = make_vocab({{"a", -1.5}});
  EXPECT_EQ(vocab_fingerprint(a), vocab_fingerprint(make_vocab({{"a", -1.0}})));
  EXPECT_NE(vocab_fingerprint(a), vocab_fingerprint(b));
}

}  // namespace
}  // namespace vtt
