#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "diccae/confusion.hpp"
#include "diccae/errors.hpp"
#include "diccae/synthetic.hpp"
#include "diccae/table.hpp"
#include "test_util.hpp"

namespace diccae {
namespace {

EmbeddingTable random_table(std::size_t n, std::size_t d, Rng& rng) {
  EmbeddingTable t;
  t.features = testing::random_matrix(n, d, rng);
  for (std::size_t i = 0; i < n; ++i) t.labels.push_back(static_cast<std::int64_t>(rng.uniform_index(5)) - 1);
  return quantize_to_float(t);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ErrorCode read_error(const std::filesystem::path& p) {
  try {
    read_table(p);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "read_table accepted " << p;
  return ErrorCode::kIo;
}

TEST(Dice, RoundTripBitExact) {
  Rng rng(1);
  const auto dir = testing::scratch_dir("dice_rt");
  for (std::size_t n : {0u, 1u, 17u, 200u}) {
    const EmbeddingTable t = random_table(n, 7, rng);
    write_table(t, dir / "t.dice");
    EXPECT_EQ(read_table(dir / "t.dice"), t) << "n = " << n;
  }
}

TEST(Dice, EmptyTableKeepsWidth) {
  EmbeddingTable t;
  t.features = Matrix(0, 5);
  const auto dir = testing::scratch_dir("dice_empty");
  write_table(t, dir / "e.dice");
  const EmbeddingTable back = read_table(dir / "e.dice");
  EXPECT_EQ(back.n(), 0u);
  EXPECT_EQ(back.d(), 5u);
  EXPECT_EQ(std::filesystem::file_size(dir / "e.dice"), 24u);
}

TEST(Dice, LayoutIsLittleEndian) {
  EmbeddingTable t;
  t.features = Matrix::from_rows({{1.0, -2.0}});
  t.labels = {3};
  const auto dir = testing::scratch_dir("dice_layout");
  write_table(t, dir / "l.dice");
  const std::string b = slurp(dir / "l.dice");
  ASSERT_EQ(b.size(), 24u + 8u + 8u);
  EXPECT_EQ(b.substr(0, 4), "DICE");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[8], 1);
  EXPECT_EQ(b[16], 2);
  EXPECT_EQ(b[24], 3);
  // 1.0f = 0x3f800000
  EXPECT_EQ(static_cast<unsigned char>(b[35]), 0x3fu);
  EXPECT_EQ(static_cast<unsigned char>(b[34]), 0x80u);
}

TEST(Dice, DistinctErrors) {
  Rng rng(2);
  const auto dir = testing::scratch_dir("dice_err");
  write_table(random_table(4, 3, rng), dir / "ok.dice");
  const std::string good = slurp(dir / "ok.dice");
  const auto put = [&](const std::string& name, const std::string& bytes) {
    std::ofstream(dir / name, std::ios::binary) << bytes;
    return dir / name;
  };
  std::string magic = good;
  magic[1] = 'X';
  EXPECT_EQ(read_error(put("magic.dice", magic)), ErrorCode::kBadMagic);
  std::string version = good;
  version[4] = 2;
  EXPECT_EQ(read_error(put("version.dice", version)), ErrorCode::kVersion);
  EXPECT_EQ(read_error(put("short.dice", good.substr(0, good.size() - 1))), ErrorCode::kTruncated);
  EXPECT_EQ(read_error(put("header.dice", good.substr(0, 10))), ErrorCode::kTruncated);
  EXPECT_EQ(read_error(put("long.dice", good + "zz")), ErrorCode::kFormat);
  EXPECT_EQ(read_error(dir / "missing.dice"), ErrorCode::kIo);
}

TEST(Dice, HugeHeaderCountIsTruncationNotAllocation) {
  const auto dir = testing::scratch_dir("dice_huge");
  std::string b = "DICE";
  b += std::string("\x01\x00\x00\x00", 4);
  b += std::string(7, '\xff') + std::string(1, '\x0f');
  b += std::string("\x02\x00\x00\x00\x00\x00\x00\x00", 8);
  std::ofstream(dir / "h.dice", std::ios::binary) << b;
  EXPECT_EQ(read_error(dir / "h.dice"), ErrorCode::kTruncated);
}

TEST(Dice, WriteLeavesNoTempFile) {
  Rng rng(3);
  const auto dir = testing::scratch_dir("dice_tmp");
  write_table(random_table(3, 2, rng), dir / "a.dice");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
}

TEST(Csv, RoundTripWithinTolerance) {
  Rng rng(4);
  const auto dir = testing::scratch_dir("csv");
  EmbeddingTable t;
  t.features = testing::random_matrix(20, 4, rng, 100.0);
  for (std::size_t i = 0; i < 20; ++i) t.labels.push_back(static_cast<std::int64_t>(i % 3) - 1);
  write_table_csv(t, dir / "t.csv");
  const EmbeddingTable back = read_table_csv(dir / "t.csv");
  ASSERT_EQ(back.labels, t.labels);
  for (std::size_t k = 0; k < t.features.size(); ++k)
    EXPECT_NEAR(back.features.values()[k], t.features.values()[k], 1e-6 * std::max(1.0, std::abs(t.features.values()[k])));
  std::ifstream in(dir / "t.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "id,label,f0,f1,f2,f3");
}

TEST(Csv, MissingHeaderRejected) {
  const auto dir = testing::scratch_dir("csv_bad");
  std::ofstream(dir / "b.csv") << "0,1,2.5\n";
  EXPECT_THROW(read_table_csv(dir / "b.csv"), Error);
}

TEST(Table, ValidateCatchesBadShapes) {
  EmbeddingTable t;
  t.features = Matrix(2, 2);
  t.labels = {0};
  try {
    t.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
  t.labels = {0, 1};
  t.features(1, 1) = INFINITY;
  EXPECT_THROW(t.validate(), Error);
}

SyntheticSpec spec_with(double multiplier, std::uint64_t seed) {
  Rng rng(seed);
  return make_synthetic_spec(4, 200, 6, 5, 4.0, 1.0, {{0, 1, multiplier}}, rng);
}

TEST(Synthetic, UnitMultiplierKeepsMeans) {
  const SyntheticSpec s = spec_with(1.0, 1);
  EXPECT_EQ(effective_means(s.audio_means, s.confusable), s.audio_means);
}

TEST(Synthetic, MultiplierPullsTowardMidpoint) {
  const SyntheticSpec s = spec_with(0.25, 2);
  const Matrix m = effective_means(s.audio_means, s.confusable);
  for (std::size_t j = 0; j < s.audio_dim(); ++j) {
    const double mid = 0.5 * (s.audio_means(0, j) + s.audio_means(1, j));
    EXPECT_NEAR(m(0, j) - mid, 0.25 * (s.audio_means(0, j) - mid), 1e-12);
    EXPECT_NEAR(m(1, j) - mid, 0.25 * (s.audio_means(1, j) - mid), 1e-12);
    EXPECT_EQ(m(2, j), s.audio_means(2, j));
  }
}

TEST(Synthetic, EmpiricalMeansNearSpec) {
  const SyntheticSpec s = spec_with(1.0, 3);
  Rng rng(30);
  const MultimodalDataset d = generate_synthetic(s, rng);
  ASSERT_EQ(d.size(), 800u);
  EXPECT_EQ(d.audio.labels, d.video.labels);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t j = 0; j < s.audio_dim(); ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < 200; ++i) mean += d.audio.features(c * 200 + i, j);
      mean /= 200.0;
      EXPECT_LT(std::abs(mean - s.audio_means(c, j)), 5.0 * s.audio_stddev[c] / std::sqrt(200.0));
    }
  }
}

TEST(Synthetic, SeedDeterminism) {
  const SyntheticSpec s = spec_with(0.5, 4);
  Rng a(7), b(7);
  const MultimodalDataset x = generate_synthetic(s, a), y = generate_synthetic(s, b);
  EXPECT_EQ(x.audio, y.audio);
  EXPECT_EQ(x.video, y.video);
}

TEST(Synthetic, CollapsedPairIsMostConfused) {
  const SyntheticSpec s = spec_with(1e-3, 5);
  Rng rng(50);
  const MultimodalDataset d = generate_synthetic(s, rng);
  const ConfusionMatrix cm = build_confusion_matrix(d.audio);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      if (!(i == 0 && j == 1)) EXPECT_GT(cm.raw(0, 1), cm.raw(i, j));
}

TEST(Synthetic, LowerMultiplierNeverLessConfusedOnAverage) {
  double prev = -1.0;
  for (double m : {1.0, 0.7, 0.4, 0.1}) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const SyntheticSpec s = spec_with(m, 100 + seed);
      Rng rng(seed);
      total += build_confusion_matrix(generate_synthetic(s, rng).audio).raw(0, 1);
    }
    EXPECT_GE(total / 5.0, prev) << "multiplier " << m;
    prev = total / 5.0;
  }
}

TEST(Synthetic, InvalidSpec) {
  Rng rng(6);
  EXPECT_THROW(make_synthetic_spec(3, 10, 2, 2, 1.0, 1.0, {{0, 1, 0.0}}, rng), Error);
  EXPECT_THROW(make_synthetic_spec(3, 10, 2, 2, 1.0, 1.0, {{0, 1, 1.5}}, rng), Error);
  EXPECT_THROW(make_synthetic_spec(3, 10, 0, 2, 1.0, 1.0, {}, rng), Error);
  EXPECT_THROW(make_synthetic_spec(3, 10, 2, 2, 1.0, 1.0, {{0, 5, 0.5}}, rng), Error);
}

}  // namespace
}  // namespace diccae
