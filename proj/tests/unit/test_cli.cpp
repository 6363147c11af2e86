#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "diccae/commands.hpp"
#include "diccae/errors.hpp"
#include "diccae/report.hpp"
#include "diccae/table.hpp"
#include "test_util.hpp"

namespace diccae {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Tag balance and attribute quoting; enough to catch broken SVG output.
bool well_formed_xml(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  bool root_seen = false;
  while ((pos = doc.find('<', pos)) != std::string::npos) {
    const std::size_t end = doc.find('>', pos);
    if (end == std::string::npos) return false;
    std::string tag = doc.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.back() == '/';
    const std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
    if (stack.empty() && root_seen) return false;
    root_seen = true;
    if (!self_closing) stack.push_back(name);
  }
  return root_seen && stack.empty();
}

EmbeddingTable blobs(std::vector<std::pair<double, double>> centers, std::size_t per, double sigma,
                     std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingTable t;
  t.features = Matrix(centers.size() * per, 2);
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (std::size_t i = 0; i < per; ++i) {
      t.features(c * per + i, 0) = centers[c].first + sigma * rng.normal();
      t.features(c * per + i, 1) = centers[c].second + sigma * rng.normal();
      t.labels.push_back(static_cast<std::int64_t>(c));
    }
  return quantize_to_float(t);
}

std::string manifest_status(const fs::path& p) {
  const std::string m = slurp(p);
  std::smatch match;
  if (std::regex_search(m, match, std::regex("\"status\": \"([a-z]+)\""))) return match[1];
  return "";
}

struct Proc {
  int status = -1;
  std::string out;
  std::string err;
};

Proc run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string(DICCAE_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  Proc p;
  p.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  p.out = slurp(out);
  p.err = slurp(err);
  return p;
}

TEST(Analyze, DisjointClustersGiveZeroStats) {
  const fs::path dir = testing::scratch_dir("analyze_disjoint");
  write_table(blobs({{0, 0}, {30, 0}}, 40, 0.1, 1), dir / "t.dice");
  std::ostringstream log;
  cmd_analyze({dir / "t.dice", dir / "out"}, log);
  const ConfusionStats s = read_stats_csv(dir / "out" / "stats.csv");
  EXPECT_EQ(s.mean, 0.0);
  EXPECT_EQ(s.variance, 0.0);
  EXPECT_EQ(s.count, 1u);
  EXPECT_TRUE(fs::exists(dir / "out" / "histogram.svg"));
  EXPECT_TRUE(well_formed_xml(slurp(dir / "out" / "histogram.svg")));
  EXPECT_EQ(manifest_status(dir / "out" / "manifest.json"), "ok");
}

TEST(Analyze, ShapeAndDeterminism) {
  const fs::path dir = testing::scratch_dir("analyze_shape");
  write_table(blobs({{0, 0}, {1, 0}, {0, 1}, {3, 3}}, 25, 0.5, 2), dir / "t.dice");
  const std::string before = slurp(dir / "t.dice");
  std::ostringstream log;
  cmd_analyze({dir / "t.dice", dir / "a"}, log);
  cmd_analyze({dir / "t.dice", dir / "b"}, log);
  for (const char* f : {"confusion_raw.csv", "confusion_normalized.csv", "stats.csv", "histogram.svg"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  EXPECT_EQ(slurp(dir / "t.dice"), before);

  std::ifstream raw(dir / "a" / "confusion_raw.csv");
  std::string line;
  std::getline(raw, line);
  EXPECT_EQ(line, "class,0,1,2,3");
  for (int r = 0; r < 4; ++r) {
    ASSERT_TRUE(std::getline(raw, line));
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 5u);
    EXPECT_EQ(cells[static_cast<std::size_t>(r) + 1], "0");
  }
  EXPECT_FALSE(std::getline(raw, line));
}

TEST(Analyze, UnlabeledInputSuggestsCluster) {
  const fs::path dir = testing::scratch_dir("analyze_unlabeled");
  EmbeddingTable t = blobs({{0, 0}, {5, 5}}, 10, 0.1, 3);
  t.labels[4] = kUnlabeled;
  write_table(t, dir / "t.dice");
  std::ostringstream log;
  try {
    cmd_analyze({dir / "t.dice", dir / "out"}, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnlabeled);
    EXPECT_NE(std::string(e.what()).find("cluster"), std::string::npos);
  }
  EXPECT_EQ(manifest_status(dir / "out" / "manifest.json"), "failed");
}

TEST(Cluster, KEqualsNPrintsZeroInertia) {
  const fs::path dir = testing::scratch_dir("cluster_kn");
  write_table(blobs({{0, 0}, {1, 1}}, 4, 1.0, 4), dir / "t.dice");
  std::ostringstream log;
  cmd_cluster({dir / "t.dice", dir / "l.dice", 8, 3, 1}, log);
  EXPECT_EQ(log.str(), "inertia 0\n");
  EXPECT_TRUE(fs::exists(dir / "l.dice.manifest.json"));
}

TEST(Cluster, SameSeedSameFileAndPermutationRecovery) {
  const fs::path dir = testing::scratch_dir("cluster_det");
  const EmbeddingTable t = blobs({{0, 0}, {10, 0}, {5, 8.66}}, 100, 0.1, 5);
  write_table(t, dir / "t.dice");
  std::ostringstream log;
  cmd_cluster({dir / "t.dice", dir / "a.dice", 3, 20, 9}, log);
  cmd_cluster({dir / "t.dice", dir / "b.dice", 3, 20, 9}, log);
  EXPECT_EQ(slurp(dir / "a.dice"), slurp(dir / "b.dice"));
  const EmbeddingTable labeled = read_table(dir / "a.dice");
  EXPECT_EQ(labeled.features, t.features);
  // One-to-one correspondence between cluster ids and true labels.
  std::map<std::int64_t, std::set<std::int64_t>> forward;
  for (std::size_t i = 0; i < t.n(); ++i) forward[t.labels[i]].insert(labeled.labels[i]);
  std::set<std::int64_t> images;
  for (const auto& [label, ids] : forward) {
    EXPECT_EQ(ids.size(), 1u);
    images.insert(*ids.begin());
  }
  EXPECT_EQ(images.size(), 3u);
}

TEST(Cluster, TooFewPoints) {
  const fs::path dir = testing::scratch_dir("cluster_small");
  write_table(blobs({{0, 0}}, 3, 1.0, 6), dir / "t.dice");
  std::ostringstream log;
  try {
    cmd_cluster({dir / "t.dice", dir / "l.dice", 5, 2, 1}, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientPoints);
  }
  EXPECT_EQ(manifest_status(dir / "l.dice.manifest.json"), "failed");
  EXPECT_FALSE(fs::exists(dir / "l.dice"));
}

void write_config(const fs::path& p, const std::string& extra) {
  std::ofstream(p) << "seed = 3\nselfsup_epochs = 2\nsup_epochs = 2\nkmeans_k = 4\nkmeans_restarts = 2\n"
                      "encoder_hidden = 16\nfusion_hidden = 16\nembedding_dim = 8\nencoder_layers = 1\n"
                   << extra;
}

fs::path generated_data(const std::string& name) {
  const fs::path dir = testing::scratch_dir(name);
  GenerateOptions g;
  g.out_dir = dir / "data";
  g.classes = 4;
  g.per_class = 30;
  g.audio_dim = 5;
  g.video_dim = 4;
  g.confusable = "0:1:0.3";
  std::ostringstream log;
  cmd_generate(g, log);
  return dir;
}

TEST(Train, OutputsAndDeterminism) {
  const fs::path dir = generated_data("train_det");
  write_config(dir / "run.cfg", "");
  std::ostringstream log;
  cmd_train({dir / "run.cfg", dir / "data", dir / "a"}, log);
  cmd_train({dir / "run.cfg", dir / "data", dir / "b"}, log);
  for (const char* f : {"epochs.csv", "timings.csv", "model.dicm", "fused_eval.dice", "eval.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  EXPECT_EQ(slurp(dir / "a" / "epochs.csv"), slurp(dir / "b" / "epochs.csv"));
  EXPECT_EQ(slurp(dir / "a" / "model.dicm"), slurp(dir / "b" / "model.dicm"));
  std::ifstream epochs(dir / "a" / "epochs.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(epochs, l);) ++lines;
  EXPECT_EQ(lines, 5u);

  // The fused eval features feed straight into analyze.
  cmd_analyze({dir / "a" / "fused_eval.dice", dir / "an"}, log);
  EXPECT_TRUE(fs::exists(dir / "an" / "stats.csv"));
}

TEST(Train, NoConfusionLossColumnIsZero) {
  const fs::path dir = generated_data("train_nocl");
  write_config(dir / "run.cfg", "no_confusion_loss = true\n");
  std::ostringstream log;
  cmd_train({dir / "run.cfg", dir / "data", dir / "o"}, log);
  std::ifstream epochs(dir / "o" / "epochs.csv");
  std::string header;
  std::getline(epochs, header);
  EXPECT_EQ(header.rfind("epoch,phase,loss_total,loss_classification,loss_infonce,loss_diccae,", 0), 0u);
  for (std::string l; std::getline(epochs, l);) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    ASSERT_GE(cells.size(), 6u);
    EXPECT_EQ(cells[5], "0");
  }
}

TEST(Train, ZeroEpochsWritesOnlyManifest) {
  const fs::path dir = generated_data("train_zero");
  std::ofstream(dir / "run.cfg") << "selfsup_epochs = 0\nsup_epochs = 0\n";
  std::ostringstream log;
  cmd_train({dir / "run.cfg", dir / "data", dir / "o"}, log);
  EXPECT_NE(log.str().find("warning"), std::string::npos);
  EXPECT_EQ(manifest_status(dir / "o" / "manifest.json"), "ok");
  EXPECT_FALSE(fs::exists(dir / "o" / "model.dicm"));
  EXPECT_FALSE(fs::exists(dir / "o" / "epochs.csv"));
}

TEST(Train, ConfigErrorNamesKey) {
  const fs::path dir = generated_data("train_badcfg");
  std::ofstream(dir / "run.cfg") << "sup_epochs = 2\nlearning_rate = 0.1\n";
  std::ostringstream log;
  try {
    cmd_train({dir / "run.cfg", dir / "data", dir / "o"}, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
  EXPECT_EQ(manifest_status(dir / "o" / "manifest.json"), "failed");
}

void write_stats(const fs::path& p, double mean, double var, std::vector<HistogramBin> bins) {
  ConfusionStats s;
  s.mean = mean;
  s.variance = var;
  s.count = 0;
  for (const auto& b : bins) s.count += b.count;
  s.histogram = std::move(bins);
  std::ofstream out(p);
  write_stats_csv(s, out);
}

TEST(Report, IdenticalInputsGiveZeroDeltas) {
  const fs::path dir = testing::scratch_dir("report_same");
  write_stats(dir / "a.csv", 0.75, 1.5, {{0, 1, 2}, {1, 2, 1}});
  std::ostringstream log;
  cmd_report({dir / "a.csv", dir / "a.csv", dir / "cmp.svg"}, log);
  EXPECT_EQ(log.str(), "delta_mean 0\ndelta_variance 0\n");
  EXPECT_TRUE(well_formed_xml(slurp(dir / "cmp.svg")));
}

TEST(Report, KnownDeltas) {
  const fs::path dir = testing::scratch_dir("report_known");
  write_stats(dir / "before.csv", 2.5, 6.0, {{0, 1, 1}, {1, 2, 2}});
  write_stats(dir / "after.csv", 1.75, 1.125, {{0, 1, 3}, {1, 2, 0}});
  std::ostringstream log;
  cmd_report({dir / "before.csv", dir / "after.csv", dir / "cmp.svg"}, log);
  EXPECT_EQ(log.str(), "delta_mean -0.75\ndelta_variance -4.875\n");
  const std::string svg = slurp(dir / "cmp.svg");
  EXPECT_NE(svg.find("before"), std::string::npos);
  EXPECT_NE(svg.find("after"), std::string::npos);
}

TEST(Report, BinMismatchRebinsWithWarning) {
  const fs::path dir = testing::scratch_dir("report_rebin");
  write_stats(dir / "fine.csv", 1, 1, {{0, 0.5, 1}, {0.5, 1, 2}, {1, 1.5, 3}, {1.5, 2, 4}});
  write_stats(dir / "coarse.csv", 1, 1, {{0, 1, 5}, {1, 2, 6}});
  std::ostringstream log;
  cmd_report({dir / "fine.csv", dir / "coarse.csv", dir / "cmp.svg"}, log);
  EXPECT_NE(log.str().find("warning"), std::string::npos);
  const std::vector<HistogramBin> fine{{0, 0.5, 1}, {0.5, 1, 2}, {1, 1.5, 3}, {1.5, 2, 4}};
  const auto r = rebin(fine, 1.0, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].count, 3u);
  EXPECT_EQ(r[1].count, 7u);
  EXPECT_TRUE(well_formed_xml(slurp(dir / "cmp.svg")));
}

TEST(Report, MalformedStats) {
  const fs::path dir = testing::scratch_dir("report_bad");
  std::ofstream(dir / "bad.csv") << "hello\n";
  write_stats(dir / "ok.csv", 0, 0, {{0, 1, 1}});
  std::ostringstream log;
  try {
    cmd_report({dir / "bad.csv", dir / "ok.csv", dir / "cmp.svg"}, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(StatsCsv, RoundTrip) {
  ConfusionStats s;
  s.mean = 0.1 + 0.2;
  s.variance = 1.0 / 3.0;
  s.count = 3;
  s.histogram = {{0, 0.1, 2}, {0.1, 0.2, 1}};
  std::stringstream io;
  write_stats_csv(s, io);
  const ConfusionStats back = read_stats_csv(io);
  EXPECT_EQ(back.mean, s.mean);
  EXPECT_EQ(back.variance, s.variance);
  EXPECT_EQ(back.count, 3u);
  ASSERT_EQ(back.histogram.size(), 2u);
  EXPECT_EQ(back.histogram[1].upper, 0.2);
}

TEST(Binary, VersionAndErrorPrefix) {
  const fs::path dir = testing::scratch_dir("binary");
  const Proc v = run_cli("--version", dir);
  EXPECT_EQ(v.status, 0);
  EXPECT_EQ(v.out, "0.1.0\n");

  const Proc missing = run_cli("analyze --input " + (dir / "nope.dice").string() + " --out " + (dir / "o").string(), dir);
  EXPECT_NE(missing.status, 0);
  EXPECT_EQ(missing.err.rfind("error:io:", 0), 0u) << missing.err;
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);

  const Proc usage = run_cli("cluster --k 3", dir);
  EXPECT_NE(usage.status, 0);
  EXPECT_EQ(usage.err.rfind("error:", 0), 0u);
}

TEST(Binary, GenerateAnalyzeRoundTrip) {
  const fs::path dir = testing::scratch_dir("binary_flow");
  const Proc g = run_cli("generate --out " + (dir / "d").string() + " --classes 3 --per-class 20 --confusable 0:1:0.5", dir);
  ASSERT_EQ(g.status, 0) << g.err;
  const Proc a = run_cli("analyze --input " + (dir / "d" / "audio.dice").string() + " --out " + (dir / "an").string() +
                             " --bins 10",
                         dir);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(read_stats_csv(dir / "an" / "stats.csv").histogram.size(), 10u);
  const Proc bad = run_cli("generate --out " + (dir / "x").string() + " --confusable 0-1", dir);
  EXPECT_EQ(bad.err.rfind("error:config:", 0), 0u) << bad.err;
}

}  // namespace
}  // namespace diccae
