#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "diccae/confusion.hpp"
#include "diccae/pipeline.hpp"

namespace diccae {

// Shortest decimal form that parses back to the same double ("%.17g").
std::string format_double(double v);

void write_matrix_csv(const ConfusionMatrix& cm, const Matrix& values, std::ostream& out);

// stats.csv: a comment line, `mean,variance,count` with one row, a blank
// line, then `bin_lower,bin_upper,count` with one row per bin.
void write_stats_csv(const ConfusionStats& stats, std::ostream& out);
ConfusionStats read_stats_csv(std::istream& in);
ConfusionStats read_stats_csv(const std::filesystem::path& path);

struct HistogramSeries {
  std::string label;
  std::string color;
  std::vector<HistogramBin> bins;
};

// Bar histogram(s) sharing one x axis; several series are drawn overlaid.
std::string render_histogram_svg(const std::vector<HistogramSeries>& series,
                                 const std::string& title);

// Rebins onto an equal-width grid from 0 with width `width` and `count` bins;
// each source bin's count lands in the target bin holding its midpoint.
std::vector<HistogramBin> rebin(const std::vector<HistogramBin>& bins, double width,
                                std::size_t count);

bool same_bin_edges(const std::vector<HistogramBin>& a, const std::vector<HistogramBin>& b);

// epochs.csv. Wall-clock times are not part of it so that reruns are
// byte-identical; see write_timings_csv.
void write_epochs_csv(const std::vector<EpochReport>& reports, std::ostream& out);
void write_timings_csv(const std::vector<EpochReport>& reports, std::ostream& out);

}  // namespace diccae
