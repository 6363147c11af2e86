#include "diccae/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "diccae/errors.hpp"

namespace diccae {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormat, "stats.csv: bad " + what + " value '" + s + "'");
  }
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  if (v < 0 || v != std::floor(v)) throw Error(ErrorCode::kFormat, "stats.csv: bad " + what + " '" + s + "'");
  return static_cast<std::size_t>(v);
}

std::string pair_text(std::pair<int, int> p) {
  if (p.first < 0) return "";
  return std::to_string(p.first) + "-" + std::to_string(p.second);
}

std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_csv(const ConfusionMatrix& cm, const Matrix& values, std::ostream& out) {
  out << "class";
  for (auto id : cm.class_ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < values.rows(); ++i) {
    out << cm.class_ids[i];
    for (std::size_t j = 0; j < values.cols(); ++j) out << ',' << format_double(values(i, j));
    out << '\n';
  }
}

void write_stats_csv(const ConfusionStats& stats, std::ostream& out) {
  out << "# confusion distribution over upper-triangle class pairs\n";
  out << "mean,variance,count\n";
  out << format_double(stats.mean) << ',' << format_double(stats.variance) << ',' << stats.count << "\n\n";
  out << "bin_lower,bin_upper,count\n";
  for (const auto& b : stats.histogram)
    out << format_double(b.lower) << ',' << format_double(b.upper) << ',' << b.count << '\n';
}

ConfusionStats read_stats_csv(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  if (lines.size() < 3 || lines[0] != "mean,variance,count" || lines[2] != "bin_lower,bin_upper,count")
    throw Error(ErrorCode::kFormat, "stats.csv: missing summary or histogram header");
  ConfusionStats s;
  const auto summary = split_csv(lines[1]);
  if (summary.size() != 3) throw Error(ErrorCode::kFormat, "stats.csv: summary row needs 3 fields");
  s.mean = parse_double(summary[0], "mean");
  s.variance = parse_double(summary[1], "variance");
  s.count = parse_count(summary[2], "count");
  for (std::size_t i = 3; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i]);
    if (cells.size() != 3) throw Error(ErrorCode::kFormat, "stats.csv: histogram row needs 3 fields");
    s.histogram.push_back({parse_double(cells[0], "bin_lower"), parse_double(cells[1], "bin_upper"),
                           parse_count(cells[2], "bin count")});
  }
  return s;
}

ConfusionStats read_stats_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_stats_csv(in);
}

std::string render_histogram_svg(const std::vector<HistogramSeries>& series, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  double x_max = 0.0;
  std::size_t y_max = 0;
  for (const auto& s : series)
    for (const auto& b : s.bins) {
      x_max = std::max(x_max, b.upper);
      y_max = std::max(y_max, b.count);
    }
  if (x_max <= 0.0) x_max = 1.0;
  if (y_max == 0) y_max = 1;
  const auto sx = [&](double x) { return kLeft + plot_w * x / x_max; };
  const auto sy = [&](double c) { return kTop + plot_h * (1.0 - c / static_cast<double>(y_max)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">" << escape_xml(title) << "</text>\n";
  for (const auto& s : series) {
    svg << "<g fill=\"" << escape_xml(s.color) << "\" fill-opacity=\"" << (series.size() > 1 ? "0.5" : "0.8")
        << "\">\n";
    for (const auto& b : s.bins) {
      if (b.count == 0) continue;
      const double x0 = sx(b.lower), x1 = sx(b.upper), y = sy(static_cast<double>(b.count));
      svg << "<rect x=\"" << svg_number(x0) << "\" y=\"" << svg_number(y) << "\" width=\""
          << svg_number(std::max(0.5, x1 - x0)) << "\" height=\"" << svg_number(kTop + plot_h - y) << "\"/>\n";
    }
    svg << "</g>\n";
  }
  // axes
  svg << "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\"/>\n</g>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_max * t / 4.0;
    svg << "<text x=\"" << svg_number(sx(xv)) << "\" y=\"" << kTop + plot_h + 16
        << "\" text-anchor=\"middle\">" << svg_number(xv) << "</text>\n";
    const double yv = static_cast<double>(y_max) * t / 4.0;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << svg_number(sy(yv) + 4) << "\" text-anchor=\"end\">"
        << svg_number(yv) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">confusion degree</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 14.0 * static_cast<double>(i);
    svg << "<rect x=\"" << kLeft + plot_w - 120 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
        << escape_xml(series[i].color) << "\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w - 104 << "\" y=\"" << y + 9 << "\">" << escape_xml(series[i].label)
        << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

std::vector<HistogramBin> rebin(const std::vector<HistogramBin>& bins, double width, std::size_t count) {
  if (!(width > 0.0) || count == 0) throw Error(ErrorCode::kConfig, "rebin needs a positive width and bin count");
  std::vector<HistogramBin> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].lower = width * static_cast<double>(i);
    out[i].upper = width * static_cast<double>(i + 1);
  }
  for (const auto& b : bins) {
    const double mid = 0.5 * (b.lower + b.upper);
    auto idx = static_cast<std::size_t>(std::max(0.0, std::floor(mid / width)));
    out[std::min(idx, count - 1)].count += b.count;
  }
  return out;
}

bool same_bin_edges(const std::vector<HistogramBin>& a, const std::vector<HistogramBin>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].lower != b[i].lower || a[i].upper != b[i].upper) return false;
  return true;
}

void write_epochs_csv(const std::vector<EpochReport>& reports, std::ostream& out) {
  out << "epoch,phase,loss_total,loss_classification,loss_infonce,loss_diccae,confusion_mean,"
         "confusion_variance,churn,refined,max_weight_pair,max_raw_pair\n";
  for (const auto& r : reports) {
    out << r.epoch << ',' << phase_name(r.phase) << ',' << format_double(r.loss_total) << ','
        << format_double(r.loss_classification) << ',' << format_double(r.loss_infonce) << ','
        << format_double(r.loss_diccae) << ',' << format_double(r.confusion_mean) << ','
        << format_double(r.confusion_variance) << ',' << format_double(r.churn) << ',' << (r.refined ? 1 : 0)
        << ',';
    if (!r.source_raw.empty()) {
      out << pair_text(argmax_pair(r.applied_weights, r.source_present)) << ','
          << pair_text(argmax_pair(r.source_raw, r.source_present));
    } else {
      out << ',';
    }
    out << '\n';
  }
}

void write_timings_csv(const std::vector<EpochReport>& reports, std::ostream& out) {
  out << "epoch,phase,seconds\n";
  for (const auto& r : reports) out << r.epoch << ',' << phase_name(r.phase) << ',' << format_double(r.seconds) << '\n';
}

}  // namespace diccae
