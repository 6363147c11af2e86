#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace diccae {

inline constexpr const char* kToolVersion = "0.1.0";

struct AnalyzeOptions {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  double coverage = 0.95;
  std::size_t bins = 40;
};

struct ClusterOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::size_t k = 16;
  std::size_t restarts = 20;
  std::uint64_t seed = 1;
};

struct TrainOptions {
  std::filesystem::path config;
  std::filesystem::path data_dir;  // holds audio.dice and video.dice
  std::filesystem::path out_dir;
};

struct ReportOptions {
  std::filesystem::path before;
  std::filesystem::path after;
  std::filesystem::path out;
};

struct GenerateOptions {
  std::filesystem::path out_dir;
  std::size_t classes = 8;
  std::size_t per_class = 100;
  std::size_t audio_dim = 16;
  std::size_t video_dim = 16;
  double separation = 3.0;
  double stddev = 1.0;
  // "i:j:multiplier" entries, comma separated.
  std::string confusable;
  std::uint64_t seed = 1;
};

// Each command writes its outputs plus a run manifest (also on failure, with
// the failure recorded) and returns normally, or throws diccae::Error. `log`
// receives human-readable progress and warnings.
void cmd_analyze(const AnalyzeOptions& options, std::ostream& log);
void cmd_cluster(const ClusterOptions& options, std::ostream& log);
void cmd_train(const TrainOptions& options, std::ostream& log);
void cmd_report(const ReportOptions& options, std::ostream& log);
void cmd_generate(const GenerateOptions& options, std::ostream& log);

// Where a command writes its manifest: <out>/manifest.json for directory
// outputs, <out>.manifest.json for file outputs.
std::filesystem::path manifest_path_for(const std::filesystem::path& out, bool out_is_dir);

}  // namespace diccae
