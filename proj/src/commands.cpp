#include "diccae/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diccae/config.hpp"
#include "diccae/confusion.hpp"
#include "diccae/errors.hpp"
#include "diccae/fusion_model.hpp"
#include "diccae/kmeans.hpp"
#include "diccae/pipeline.hpp"
#include "diccae/report.hpp"
#include "diccae/synthetic.hpp"
#include "diccae/table.hpp"

namespace diccae {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects what a command did and writes it next to its outputs when the
// command returns or fails.
class Manifest {
 public:
  Manifest(std::string command, fs::path out, bool out_is_dir)
      : out_(std::move(out)), out_is_dir_(out_is_dir) {
    doc_["command"] = std::move(command);
    doc_["tool_version"] = kToolVersion;
    doc_["started"] = utc_timestamp();
    doc_["config"] = json::object();
    doc_["seeds"] = json::object();
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }

  json& config() { return doc_["config"]; }
  json& seeds() { return doc_["seeds"]; }
  void input(const fs::path& p) { doc_["inputs"].push_back(p.string()); }
  void output(const fs::path& p) { doc_["outputs"].push_back(p.string()); }
  void warn(const std::string& w) { doc_["warnings"].push_back(w); }

  void write(const std::string& status, const std::string& error = {}) {
    doc_["finished"] = utc_timestamp();
    doc_["status"] = status;
    if (!error.empty()) doc_["error"] = error;
    const fs::path path = manifest_path_for(out_, out_is_dir_);
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    write_file_atomic(path, doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  fs::path out_;
  bool out_is_dir_;
};

// Runs `body`, then writes the manifest with the outcome. Errors are
// rethrown after the manifest is on disk.
template <typename Body>
void with_manifest(Manifest& manifest, Body&& body) {
  try {
    body();
  } catch (const Error& e) {
    try {
      manifest.write("failed", std::string(error_code_name(e.code())) + ": " + e.what());
    } catch (const std::exception&) {
    }
    throw;
  } catch (const std::exception& e) {
    try {
      manifest.write("failed", e.what());
    } catch (const std::exception&) {
    }
    throw;
  }
  manifest.write("ok");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory " + dir.string() + ": " + ec.message());
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw Error(ErrorCode::kIo, "no such file: " + p.string());
}

std::vector<ConfusablePair> parse_confusable(const std::string& text) {
  std::vector<ConfusablePair> pairs;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (item.empty()) continue;
    ConfusablePair p;
    char c1 = 0, c2 = 0;
    std::istringstream is(item);
    if (!(is >> p.first >> c1 >> p.second >> c2 >> p.multiplier) || c1 != ':' || c2 != ':' || !is.eof())
      throw Error(ErrorCode::kConfig, "confusable: expected i:j:multiplier, got '" + item + "'");
    pairs.push_back(p);
  }
  return pairs;
}

json config_json(const TrainConfig& config) {
  json j = json::object();
  std::istringstream in(format_config(config));
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

double bin_width(const std::vector<HistogramBin>& bins) {
  return bins.empty() ? 0.0 : bins.front().upper - bins.front().lower;
}

}  // namespace

fs::path manifest_path_for(const fs::path& out, bool out_is_dir) {
  if (out_is_dir) return out / "manifest.json";
  fs::path p = out;
  p += ".manifest.json";
  return p;
}

void cmd_analyze(const AnalyzeOptions& options, std::ostream& log) {
  Manifest manifest("analyze", options.out_dir, true);
  manifest.config()["coverage"] = options.coverage;
  manifest.config()["bins"] = options.bins;
  manifest.input(options.input);
  with_manifest(manifest, [&] {
    ensure_dir(options.out_dir);
    const EmbeddingTable table = read_table(options.input);
    table.validate();
    if (!table.fully_labeled()) {
      throw Error(ErrorCode::kUnlabeled, options.input.string() +
                                             " has unlabeled rows; run `diccae cluster` first to assign pseudo-labels");
    }
    const ConfusionMatrix cm = build_confusion_matrix(table, options.coverage);
    const ConfusionStats stats = confusion_stats(cm, options.bins);

    std::ostringstream raw, normalized, stats_csv;
    write_matrix_csv(cm, cm.raw, raw);
    write_matrix_csv(cm, cm.normalized, normalized);
    write_stats_csv(stats, stats_csv);
    const std::string svg = render_histogram_svg({{"confusion", "#4c72b0", stats.histogram}},
                                                 "Inter-class confusion degree");
    const std::vector<std::pair<std::string, std::string>> files = {
        {"confusion_raw.csv", raw.str()},
        {"confusion_normalized.csv", normalized.str()},
        {"stats.csv", stats_csv.str()},
        {"histogram.svg", svg},
    };
    for (const auto& [name, body] : files) {
      write_file_atomic(options.out_dir / name, body);
      manifest.output(options.out_dir / name);
    }
    log << "classes " << cm.class_ids.size() << "\n";
    log << "mean " << format_double(stats.mean) << "\n";
    log << "variance " << format_double(stats.variance) << "\n";
  });
}

void cmd_cluster(const ClusterOptions& options, std::ostream& log) {
  Manifest manifest("cluster", options.output, false);
  manifest.config()["k"] = options.k;
  manifest.config()["restarts"] = options.restarts;
  manifest.seeds()["seed"] = options.seed;
  manifest.input(options.input);
  with_manifest(manifest, [&] {
    ensure_parent(options.output);
    const EmbeddingTable table = read_table(options.input);
    table.validate();
    Rng rng(options.seed);
    KMeansOptions ko;
    ko.restarts = options.restarts;
    const KMeansResult km = kmeans(table.features, options.k, rng, ko);
    EmbeddingTable out;
    out.features = table.features;
    out.labels.assign(km.assignments.begin(), km.assignments.end());
    write_table(out, options.output);
    manifest.output(options.output);
    manifest.config()["inertia"] = km.inertia;
    log << "inertia " << format_double(km.inertia) << "\n";
  });
}

void cmd_train(const TrainOptions& options, std::ostream& log) {
  Manifest manifest("train", options.out_dir, true);
  manifest.input(options.config);
  with_manifest(manifest, [&] {
    ensure_dir(options.out_dir);
    const TrainConfig config = load_config(options.config);
    manifest.config() = config_json(config);
    manifest.seeds()["seed"] = config.seed;

    if (config.selfsup_epochs == 0 && config.sup_epochs == 0) {
      const std::string w = "both phases have zero epochs; nothing to train";
      log << "warning: " << w << "\n";
      manifest.warn(w);
      return;
    }

    const fs::path audio_path = options.data_dir / "audio.dice";
    const fs::path video_path = options.data_dir / "video.dice";
    require_file(audio_path);
    require_file(video_path);
    manifest.input(audio_path);
    manifest.input(video_path);
    MultimodalDataset data{read_table(audio_path), read_table(video_path)};
    data.validate();

    const TrainingRun run = run_training(config, data);

    std::ostringstream epochs, timings;
    write_epochs_csv(run.reports, epochs);
    write_timings_csv(run.reports, timings);
    write_file_atomic(options.out_dir / "epochs.csv", epochs.str());
    write_file_atomic(options.out_dir / "timings.csv", timings.str());
    manifest.output(options.out_dir / "epochs.csv");
    manifest.output(options.out_dir / "timings.csv");
    if (run.model) {
      save_checkpoint(*run.model, options.out_dir / "model.dicm");
      manifest.output(options.out_dir / "model.dicm");
    }
    if (run.eval) {
      const EvalResult& ev = *run.eval;
      write_table(ev.fused, options.out_dir / "fused_eval.dice");
      manifest.output(options.out_dir / "fused_eval.dice");
      std::ostringstream eval_csv;
      eval_csv << "accuracy,total,confusion_mean,confusion_variance\n"
               << format_double(ev.accuracy) << ',' << ev.total << ',' << format_double(ev.stats.mean) << ','
               << format_double(ev.stats.variance) << '\n';
      write_file_atomic(options.out_dir / "eval.csv", eval_csv.str());
      manifest.output(options.out_dir / "eval.csv");
      if (!ev.stats.histogram.empty()) {
        std::ostringstream stats_csv;
        write_stats_csv(ev.stats, stats_csv);
        write_file_atomic(options.out_dir / "eval_stats.csv", stats_csv.str());
        manifest.output(options.out_dir / "eval_stats.csv");
      }
      log << "eval accuracy " << format_double(ev.accuracy) << "\n";
    }
    log << "epochs " << run.reports.size() << "\n";
  });
}

void cmd_report(const ReportOptions& options, std::ostream& log) {
  Manifest manifest("report", options.out, false);
  manifest.input(options.before);
  manifest.input(options.after);
  with_manifest(manifest, [&] {
    ensure_parent(options.out);
    ConfusionStats before = read_stats_csv(options.before);
    ConfusionStats after = read_stats_csv(options.after);
    if (!same_bin_edges(before.histogram, after.histogram)) {
      const double width = std::max(bin_width(before.histogram), bin_width(after.histogram));
      double top = 0.0;
      for (const auto* h : {&before.histogram, &after.histogram})
        if (!h->empty()) top = std::max(top, h->back().upper);
      if (width > 0.0) {
        const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(top / width - 1e-9)));
        before.histogram = rebin(before.histogram, width, count);
        after.histogram = rebin(after.histogram, width, count);
      }
      const std::string w = "histogram bins differ; rebinned both to width " + format_double(width);
      log << "warning: " << w << "\n";
      manifest.warn(w);
    }
    const std::string svg = render_histogram_svg(
        {{"before", "#8c8c8c", before.histogram}, {"after", "#4c72b0", after.histogram}},
        "Inter-class confusion degree: before vs after");
    write_file_atomic(options.out, svg);
    manifest.output(options.out);
    const double dmean = after.mean - before.mean;
    const double dvar = after.variance - before.variance;
    manifest.config()["delta_mean"] = dmean;
    manifest.config()["delta_variance"] = dvar;
    log << "delta_mean " << format_double(dmean) << "\n";
    log << "delta_variance " << format_double(dvar) << "\n";
  });
}

void cmd_generate(const GenerateOptions& options, std::ostream& log) {
  Manifest manifest("generate", options.out_dir, true);
  manifest.config()["classes"] = options.classes;
  manifest.config()["per_class"] = options.per_class;
  manifest.config()["audio_dim"] = options.audio_dim;
  manifest.config()["video_dim"] = options.video_dim;
  manifest.config()["separation"] = options.separation;
  manifest.config()["stddev"] = options.stddev;
  manifest.config()["confusable"] = options.confusable;
  manifest.seeds()["seed"] = options.seed;
  with_manifest(manifest, [&] {
    ensure_dir(options.out_dir);
    Rng rng(options.seed);
    const SyntheticSpec spec =
        make_synthetic_spec(options.classes, options.per_class, options.audio_dim, options.video_dim,
                            options.separation, options.stddev, parse_confusable(options.confusable), rng);
    const MultimodalDataset data = generate_synthetic(spec, rng);
    write_table(data.audio, options.out_dir / "audio.dice");
    write_table(data.video, options.out_dir / "video.dice");
    manifest.output(options.out_dir / "audio.dice");
    manifest.output(options.out_dir / "video.dice");
    log << "samples " << data.size() << "\n";
  });
}

}  // namespace diccae
