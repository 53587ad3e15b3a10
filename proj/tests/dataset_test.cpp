#include "stgd/core/errors.hpp"
#include "stgd/core/statistics.hpp"
#include "stgd/datasets/dataset.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace stgd;
using namespace stgd::data;
namespace fs = std::filesystem;

namespace {

FactorRecord factors(double p, double s, double b, double slope, int steps) {
  FactorRecord f;
  f.spatial_factor_p = p;
  f.joint_factor_s = s;
  f.graph_factor_b = b;
  f.time_slope = slope;
  f.time_profile = linear_time_profile(slope, steps);
  return f;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          (std::string("stgd_data_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

}  // namespace

TEST(Waxman, EdgeProbabilityExamples) {
  EXPECT_DOUBLE_EQ(waxman_edge_probability(0.0, 3.0, 0.4, 0.1), 0.4);
  EXPECT_NEAR(waxman_edge_probability(3.0, 3.0, 0.4, 0.1), 0.4 * std::exp(-10.0), 1e-18);
  EXPECT_NEAR(waxman_edge_probability(3.0, 3.0, 0.4, 0.1), 1.816e-5, 1e-8);
}

TEST(Waxman, EmpiricalFrequencyAtFixedRatio) {
  WaxmanParams p;
  std::mt19937_64 rng(5);
  const int draws = 10000;
  int hits = 0;
  for (int i = 0; i < draws; ++i) hits += draw_waxman_edge(0.05, 1.0, p, rng) ? 1 : 0;
  const double q = 0.4 * std::exp(-0.5);
  EXPECT_NEAR(q, 0.2426, 1e-4);
  EXPECT_NEAR(hits / double(draws), q, 3 * std::sqrt(q * (1 - q) / draws));
}

TEST(Waxman, SequenceFreezesTopologyAndRampsSize) {
  WaxmanParams p;
  auto f = factors(3, 5, 7, 2, p.seq_len);
  auto g = generate_waxman_sequence(p, f, 9);
  ASSERT_EQ(g.length(), 8u);
  EXPECT_TRUE(validate_graph(g));
  for (std::size_t t = 0; t < g.length(); ++t) {
    EXPECT_EQ(g.snapshots[t].adjacency, g.snapshots[0].adjacency);
    EXPECT_EQ(g.snapshots[t].coords, g.snapshots[0].coords);
    EXPECT_EQ(g.snapshots[t].node_features.col(0), g.snapshots[0].node_features.col(0));
    EXPECT_TRUE((g.snapshots[t].node_features.col(1).array() == 2.0 * (t + 1) / 8.0).all());
  }
  // Raw positions lie in the factor square; normalized ones in [0, 1].
  const Matrix raw = raw_coords(g.snapshots[0], *g.frame);
  EXPECT_GE(raw.minCoeff(), 3.0 - 1e-9);
  EXPECT_LE(raw.maxCoeff(), 3.0 + 25 * 5 + 1e-9);
  EXPECT_GE(g.snapshots[0].coords.minCoeff(), 0.0);
  EXPECT_LE(g.snapshots[0].coords.maxCoeff(), 1.0);
  EXPECT_EQ(generate_waxman_sequence(p, f, 9), g);
  EXPECT_NE(generate_waxman_sequence(p, f, 10), g);
}

TEST(Waxman, RejectsOutOfRangeFactors) {
  WaxmanParams p;
  EXPECT_THROW(generate_waxman_sequence(p, factors(0, 5, 7, 2, 8), 1), DataError);
  EXPECT_THROW(generate_waxman_sequence(p, factors(3, 12, 7, 2, 8), 1), DataError);
  EXPECT_THROW(generate_waxman_sequence(p, factors(3, 5, 7, 2, 7), 1), DataError);
}

TEST(Rgg, EdgeRuleIsExact) {
  EXPECT_TRUE(rgg_edge(6.0, 12.0));
  EXPECT_FALSE(rgg_edge(24.0, 12.0));
  EXPECT_FALSE(rgg_edge(12.0, 12.0));
  RggParams p;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    auto g = generate_rgg_sequence(p, sample_factors(p, rng), seed);
    const Matrix raw = raw_coords(g.snapshots[0], *g.frame);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      for (Eigen::Index j = 0; j < raw.rows(); ++j) {
        if (i == j) continue;
        EXPECT_EQ(g.snapshots[0].adjacency(i, j) == 1.0, (raw.row(i) - raw.row(j)).norm() < 12.0);
      }
    }
  }
}

TEST(Rgg, TightClusterIsComplete) {
  RggParams p;
  p.theta = 1e6;
  auto g = generate_rgg_sequence(p, factors(1, 4, 1, 1, 8), 3);
  EXPECT_EQ(graph_density(g.snapshots[0]), 1.0);
}

TEST(Factors, SampledWithinRangesAndColorMeanConverges) {
  WaxmanParams p;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) EXPECT_NO_THROW(check_factors(p, sample_factors(p, rng)));
  double sum = 0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto g = generate_waxman_sequence(p, factors(2, 4, 6, 1, 8), seed);
    sum += g.snapshots[0].node_features.col(0).sum();
    count += 25;
  }
  EXPECT_NEAR(sum / count, 6.0, 4.0 / std::sqrt(count));
}

TEST(Params, JsonRoundTrip) {
  WaxmanParams w;
  w.beta = 0.7;
  w.time_slope_range = {2, 3};
  EXPECT_EQ(to_json(waxman_params_from_json(to_json(w))), to_json(w));
  RggParams r;
  r.theta = 9;
  EXPECT_EQ(rgg_params_from_json(to_json(r)).theta, 9.0);
}

TEST_F(TempDir, BuildAndLoadDataset) {
  WaxmanParams p;
  p.n_nodes = 6;
  p.seq_len = 3;
  auto manifest = build_dataset(dir, p, {12, 5}, 7);
  EXPECT_EQ(manifest["counts"]["train"], 12);
  auto train = load_dataset(dir, "train");
  auto test = load_dataset(dir, "test");
  EXPECT_EQ(train.sequences.size(), 12u);
  EXPECT_EQ(test.sequences.size(), 5u);
  EXPECT_EQ(train.sequences[4], generate_sequence(p, sequence_seed(7, "train", 4)));
  EXPECT_TRUE(train.sequences[0].factors.has_value());
}

TEST_F(TempDir, SameSeedGivesIdenticalFiles) {
  RggParams p;
  p.n_nodes = 6;
  p.seq_len = 2;
  build_dataset(dir / "a", p, {4, 3}, 11);
  build_dataset(dir / "b", p, {4, 3}, 11);
  for (const char* f : {"manifest.json", "train.jsonl", "test.jsonl"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  build_dataset(dir / "c", p, {4, 3}, 12);
  EXPECT_NE(slurp(dir / "a" / "train.jsonl"), slurp(dir / "c" / "train.jsonl"));
}

TEST_F(TempDir, LoadErrorsNameTheLine) {
  WaxmanParams p;
  p.n_nodes = 6;
  p.seq_len = 2;
  build_dataset(dir, p, {10, 2}, 3);
  std::vector<std::string> lines;
  {
    std::ifstream in(dir / "train.jsonl");
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  lines[6] = lines[6].substr(0, 40);
  {
    std::ofstream out(dir / "train.jsonl", std::ios::trunc);
    for (auto& l : lines) out << l << '\n';
  }
  try {
    load_dataset(dir, "train");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos) << e.what();
  }
  std::ofstream(dir / "train.jsonl", std::ios::trunc).flush();
  try {
    load_dataset(dir, "train");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("count mismatch"), std::string::npos);
  }
  EXPECT_THROW(load_dataset(dir / "missing", "train"), IoError);
}
