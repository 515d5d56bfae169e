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

#include "vtt/overlap.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support/random_vocab.hpp"

namespace vtt {
namespace {

const std::string kB = "\xE2\x96\x81";

PieceClass cls(const std::string& text, PieceKind kind = PieceKind::Normal) {
  return classify_piece(Piece{text, -1.0, kind});
}

TEST(ClassifyTest, Exemplars) {
  EXPECT_EQ(cls("<0xE3>", PieceKind::ByteFallback), PieceClass::ByteFallback);
  EXPECT_EQ(cls(kB + "the"), PieceClass::AlphaNum);
  EXPECT_EQ(cls("the"), PieceClass::AlphaNum);
  EXPECT_EQ(cls("a"), PieceClass::AlphaNum);
  EXPECT_EQ(cls("1"), PieceClass::AlphaNum);
  EXPECT_EQ(cls("+"), PieceClass::Symbol);
  EXPECT_EQ(cls("="), PieceClass::Symbol);
  EXPECT_EQ(cls("##"), PieceClass::Symbol);
  EXPECT_EQ(cls(kB + "("), PieceClass::Symbol);
  EXPECT_EQ(cls("\xE6\x97\xA5"), PieceClass::Other);  // 日
  EXPECT_EQ(cls(kB), PieceClass::Other);
  EXPECT_EQ(cls("a+"), PieceClass::Other);
  EXPECT_EQ(cls("caf\xC3\xA9"), PieceClass::Other);
  EXPECT_EQ(cls(kB + kB + "a"), PieceClass::Other);  // only one marker is stripped
  EXPECT_EQ(cls("<s>", PieceKind::Special), PieceClass::Other);
}

TEST(OverlapTest, SelfIntersectionMatchesCensus) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vocabulary v = testing::random_vocab(rng, false);
    const OverlapReport r = overlap_report(v, v);
    EXPECT_EQ(r.total, v.size());
    EXPECT_EQ(r.counts, class_census(v));
    for (std::size_t i = 0; i < r.shared.size(); ++i) {
      EXPECT_EQ(r.shared[i].first, static_cast<int>(i));
      EXPECT_EQ(r.shared[i].second, static_cast<int>(i));
    }
  }
}

TEST(OverlapTest, DisjointNormalPieces) {
  const Vocabulary a = make_vocab({{kB + "the", -1.0}, {"t", -2.0}, {"h", -2.0}, {"e", -2.0}, {kB, -2.0}});
  const Vocabulary b = make_vocab({{kB + "\xE6\x97\xA5", -1.0}, {"\xE6\x97\xA5", -2.0}, {"+", -3.0}});
  const OverlapReport r = overlap_report(a, b);
  EXPECT_EQ(r.count(PieceClass::ByteFallback), 256u);
  EXPECT_EQ(r.total, 256u + kSpecialPieces.size());
  EXPECT_EQ(r.count(PieceClass::Other), kSpecialPieces.size());
  EXPECT_EQ(r.count(PieceClass::AlphaNum), 0u);
}

TEST(OverlapTest, SpecialsMatchByRoleNotText) {
  // Specials match by role even when their ids differ.
  std::vector<Piece> pieces = {{"<unk>", 0.0, PieceKind::Special}, {"<pad>", 0.0, PieceKind::Special},
                               {"a", -1.0, PieceKind::Normal}};
  const Vocabulary a(pieces);
  std::vector<Piece> other = {{"a", -1.0, PieceKind::Normal}, {"<pad>", 0.0, PieceKind::Special},
                              {"<unk>", 0.0, PieceKind::Special}};
  const Vocabulary b(other);
  const OverlapReport r = overlap_report(a, b);
  ASSERT_EQ(r.total, 3u);
  EXPECT_EQ(r.shared[0], (std::pair<int, int>{2, 0}));
  EXPECT_EQ(r.shared[1], (std::pair<int, int>{1, 1}));
  EXPECT_EQ(r.shared[2], (std::pair<int, int>{0, 2}));
  // A normal piece spelled like a special does not match the special.
  const Vocabulary c(std::vector<Piece>{{"<s>", -1.0, PieceKind::Normal}});
  const Vocabulary d(std::vector<Piece>{{"<s>", 0.0, PieceKind::Special}});
  EXPECT_EQ(overlap_report(c, d).total, 0u);
}

TEST(OverlapTest, SymmetryPartitionAndMonotonicity) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 200; ++k) {
    const Vocabulary a = testing::random_vocab(rng, false, rng() % 2 == 0);
    const Vocabulary b = testing::random_vocab(rng, false, rng() % 2 == 0);
    const OverlapReport ab = overlap_report(a, b);
    const OverlapReport ba = overlap_report(b, a);
    EXPECT_EQ(ab.total, ba.total);
    std::size_t sum = 0;
    for (const auto c : kPieceClasses) sum += ab.count(c);
    EXPECT_EQ(sum, ab.total);
    EXPECT_EQ(ab.shared.size(), ab.total);
    std::set<int> seen_new, seen_orig;
    int prev = -1;
    for (const auto& [o, n] : ab.shared) {
      EXPECT_TRUE(seen_orig.insert(o).second);
      EXPECT_TRUE(seen_new.insert(n).second);
      EXPECT_GT(n, prev);
      prev = n;
      EXPECT_EQ(a.piece(o).text, b.piece(n).text);
    }

    // Add one piece of `a` that `b` lacks.
    for (const auto& p : a.pieces()) {
      if (p.kind != PieceKind::Normal || b.find(p.text)) continue;
      std::vector<Piece> grown = b.pieces();
      grown.push_back(p);
      EXPECT_EQ(overlap_report(a, Vocabulary(grown)).total, ab.total + 1);
      break;
    }
  }
}

}  // namespace
}  // namespace vtt
