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

#include "vtt/tensorio.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "support/temp_dir.hpp"
#include "vtt/tensor.hpp"

namespace vtt {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

Checkpoint sample(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist;
  Checkpoint c;
  for (const auto& [name, r, k] : std::vector<std::tuple<std::string, std::size_t, std::size_t>>{
           {"embed", 50, 8}, {"layer0.attn", 8, 8}, {"output", 50, 8}}) {
    TensorF32 t(name, r, k);
    for (auto& x : t.data) x = dist(rng);
    c.tensors.push_back(std::move(t));
  }
  c.metadata = {{"seed", std::to_string(seed)}, {"note", "caf\xC3\xA9"}, {"empty", ""}};
  return c;
}

std::uint32_t le32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(s[at + k]);
  return v;
}

TEST(TensorIoTest, RoundTripAndRewriteAreByteIdentical) {
  testing::TempDir dir;
  const Checkpoint c = sample(1);
  write_checkpoint(c, dir / "a.vtt");
  const Checkpoint back = read_checkpoint(dir / "a.vtt");
  EXPECT_EQ(back, c);
  write_checkpoint(back, dir / "b.vtt");
  EXPECT_EQ(slurp(dir / "a.vtt"), slurp(dir / "b.vtt"));
}

TEST(TensorIoTest, ByteLayout) {
  testing::TempDir dir;
  Checkpoint c;
  c.tensors.emplace_back("ab", 1, 2, std::vector<float>{1.0f, -2.0f});
  c.metadata = {{"k", "vv"}};
  write_checkpoint(c, dir / "x.vtt");
  const std::string s = slurp(dir / "x.vtt");
  // magic, count, u16 len, name, rows, cols, payload, meta count, key, value, crc
  ASSERT_EQ(s.size(), 4u + 4 + 2 + 2 + 4 + 4 + 8 + 4 + (4 + 1) + (4 + 2) + 4);
  EXPECT_EQ(s.substr(0, 4), "VTT1");
  EXPECT_EQ(le32(s, 4), 1u);
  EXPECT_EQ(static_cast<unsigned char>(s[8]), 2);
  EXPECT_EQ(s[9], 0);
  EXPECT_EQ(s.substr(10, 2), "ab");
  EXPECT_EQ(le32(s, 12), 1u);
  EXPECT_EQ(le32(s, 16), 2u);
  EXPECT_EQ(le32(s, 20), 0x3F800000u);
  EXPECT_EQ(le32(s, 24), 0xC0000000u);
  EXPECT_EQ(le32(s, 28), 1u);
  EXPECT_EQ(le32(s, 32), 1u);
  EXPECT_EQ(s[36], 'k');
  EXPECT_EQ(le32(s, 37), 2u);
  EXPECT_EQ(s.substr(41, 2), "vv");
  const std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size() - 4)));
  EXPECT_EQ(le32(s, s.size() - 4), crc);
}

TEST(TensorIoTest, EmptyCheckpoint) {
  testing::TempDir dir;
  write_checkpoint(Checkpoint{}, dir / "e.vtt");
  EXPECT_EQ(read_checkpoint(dir / "e.vtt"), Checkpoint{});
}

TEST(TensorIoTest, WriterRejectsInvalidCheckpoints) {
  testing::TempDir dir;
  Checkpoint dup = sample(1);
  dup.tensors[1].name = "embed";
  EXPECT_THROW(write_checkpoint(dup, dir / "d.vtt"), ValidationError);
  Checkpoint unnamed = sample(1);
  unnamed.tensors[0].name.clear();
  EXPECT_THROW(write_checkpoint(unnamed, dir / "d.vtt"), ValidationError);
  EXPECT_FALSE(std::filesystem::exists(dir / "d.vtt"));
}

std::uint64_t expect_format_error(const std::filesystem::path& p) {
  try {
    read_checkpoint(p);
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no FormatError";
  return 0;
}

TEST(TensorIoTest, MalformedInputsReportOffsets) {
  testing::TempDir dir;
  write_checkpoint(sample(2), dir / "ok.vtt");
  const std::string good = slurp(dir / "ok.vtt");

  std::string bad = good;
  bad[0] = 'X';
  spit(dir / "m.vtt", bad);
  EXPECT_EQ(expect_format_error(dir / "m.vtt"), 0u);

  spit(dir / "t.vtt", good.substr(0, good.size() - 100));
  expect_format_error(dir / "t.vtt");

  bad = good;
  bad[18] = '\x7F';  // high byte of the first tensor's rows
  spit(dir / "l.vtt", bad);
  EXPECT_EQ(expect_format_error(dir / "l.vtt"), 23u);  // payload of "embed" starts at 4+4+2+5+4+4

  bad = good;
  bad[good.size() - 40] ^= 0x01;  // a metadata byte: only the checksum notices
  spit(dir / "c.vtt", bad);
  expect_format_error(dir / "c.vtt");

  // Duplicate name.
  Checkpoint two;
  two.tensors.emplace_back("aa", 1, 1, std::vector<float>{1.0f});
  two.tensors.emplace_back("bb", 1, 1, std::vector<float>{2.0f});
  write_checkpoint(two, dir / "two.vtt");
  std::string dupe = slurp(dir / "two.vtt");
  const std::size_t second = 8 + (2 + 2 + 8 + 4);
  dupe[second + 2] = 'a';
  dupe[second + 3] = 'a';
  spit(dir / "dup.vtt", dupe);
  EXPECT_EQ(expect_format_error(dir / "dup.vtt"), second);

  // NaN payload.
  std::string nan = slurp(dir / "two.vtt");
  const std::uint32_t qnan = 0x7FC00000u;
  std::memcpy(&nan[8 + 2 + 2 + 8], &qnan, 4);
  spit(dir / "nan.vtt", nan);
  EXPECT_EQ(expect_format_error(dir / "nan.vtt"), 20u);

  EXPECT_THROW(read_checkpoint(dir / "missing.vtt"), Error);
}

TEST(TensorIoTest, FuzzedInputsNeverCrash) {
  testing::TempDir dir;
  write_checkpoint(sample(3), dir / "ok.vtt");
  const std::string good = slurp(dir / "ok.vtt");
  std::mt19937_64 rng(17);
  int rejected = 0;
  for (int trial = 0; trial < 600; ++trial) {
    std::string s = good;
    switch (trial % 4) {
      case 0:
        for (int k = 0; k < 1 + static_cast<int>(rng() % 4); ++k) s[rng() % s.size()] = static_cast<char>(rng());
        break;
      case 1:
        s.resize(rng() % s.size());
        break;
      case 2:
        s.insert(rng() % s.size(), std::string(1 + rng() % 8, static_cast<char>(rng())));
        break;
      default:
        s = std::string(rng() % 64, '\0');
        for (auto& c : s) c = static_cast<char>(rng());
        if (s.size() >= 4 && rng() % 2) std::memcpy(s.data(), "VTT1", 4);
    }
    spit(dir / "f.vtt", s);
    try {
      const Checkpoint c = read_checkpoint(dir / "f.vtt");
      for (const auto& t : c.tensors) EXPECT_EQ(t.data.size(), t.rows * t.cols);
    } catch (const FormatError&) {
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 500);
}

TEST(TensorIoTest, AtomicWriteLeavesNoTempFiles) {
  testing::TempDir dir;
  write_checkpoint(sample(4), dir / "a.vtt");
  write_checkpoint(sample(5), dir / "a.vtt");
  EXPECT_EQ(read_checkpoint(dir / "a.vtt"), sample(5));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1u);
}

}  // namespace
}  // namespace vtt
