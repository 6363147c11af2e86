// diccae: confusion analysis, clustering, training and reporting for
// multimodal embedding tables.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "diccae/commands.hpp"
#include "diccae/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Inter-class confusion analysis and confusion-aware training"};
  app.set_version_flag("--version", std::string(diccae::kToolVersion));
  app.require_subcommand(1);

  diccae::AnalyzeOptions analyze;
  auto* a = app.add_subcommand("analyze", "Confusion matrix, stats and histogram for a labeled table");
  a->add_option("--input", analyze.input, "DICE table")->required();
  a->add_option("--out", analyze.out_dir, "Output directory")->required();
  a->add_option("--coverage", analyze.coverage, "Coverage fraction of the class circles")
      ->check(CLI::Range(0.0, 1.0));
  a->add_option("--bins", analyze.bins, "Histogram bins")->check(CLI::PositiveNumber);

  diccae::ClusterOptions cluster;
  auto* c = app.add_subcommand("cluster", "K-means pseudo-labels for a table");
  c->add_option("--input", cluster.input, "DICE table")->required();
  c->add_option("--out", cluster.output, "Labeled DICE table to write")->required();
  c->add_option("--k", cluster.k, "Cluster count")->check(CLI::PositiveNumber);
  c->add_option("--restarts", cluster.restarts, "K-means restarts")->check(CLI::PositiveNumber);
  c->add_option("--seed", cluster.seed, "Random seed");

  diccae::TrainOptions train;
  auto* t = app.add_subcommand("train", "Self-supervised then supervised training");
  t->add_option("--config", train.config, "Config file")->required();
  t->add_option("--data", train.data_dir, "Directory with audio.dice and video.dice")->required();
  t->add_option("--out", train.out_dir, "Output directory")->required();

  diccae::ReportOptions report;
  auto* r = app.add_subcommand("report", "Compare two stats.csv files");
  r->add_option("--before", report.before, "Baseline stats.csv")->required();
  r->add_option("--after", report.after, "Comparison stats.csv")->required();
  r->add_option("--out", report.out, "SVG to write")->required();

  diccae::GenerateOptions generate;
  auto* g = app.add_subcommand("generate", "Synthetic paired audio/video tables");
  g->add_option("--out", generate.out_dir, "Output directory")->required();
  g->add_option("--classes", generate.classes)->check(CLI::PositiveNumber);
  g->add_option("--per-class", generate.per_class)->check(CLI::PositiveNumber);
  g->add_option("--audio-dim", generate.audio_dim)->check(CLI::PositiveNumber);
  g->add_option("--video-dim", generate.video_dim)->check(CLI::PositiveNumber);
  g->add_option("--separation", generate.separation);
  g->add_option("--stddev", generate.stddev);
  g->add_option("--confusable", generate.confusable, "i:j:multiplier list, comma separated");
  g->add_option("--seed", generate.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error:usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*a) diccae::cmd_analyze(analyze, std::cout);
    if (*c) diccae::cmd_cluster(cluster, std::cout);
    if (*t) diccae::cmd_train(train, std::cout);
    if (*r) diccae::cmd_report(report, std::cout);
    if (*g) diccae::cmd_generate(generate, std::cout);
  } catch (const diccae::Error& e) {
    std::cerr << "error:" << diccae::error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error:internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
