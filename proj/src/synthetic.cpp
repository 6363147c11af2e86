#include "diccae/synthetic.hpp"

#include <cmath>
#include <string>

#include "diccae/errors.hpp"

namespace diccae {
namespace {

Matrix random_sphere_means(std::size_t classes, std::size_t dim, double radius, Rng& rng) {
  Matrix means(classes, dim);
  for (std::size_t c = 0; c < classes; ++c) {
    auto row = means.row(c);
    double len = 0.0;
    do {
      for (double& v : row) v = rng.normal();
      len = norm(row);
    } while (len < 1e-12);
    for (double& v : row) v *= radius / len;
  }
  return means;
}

Matrix sample_modality(const Matrix& means, const Vector& stddev, std::size_t per_class, Rng& rng) {
  Matrix out(means.rows() * per_class, means.cols());
  for (std::size_t c = 0; c < means.rows(); ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      auto row = out.row(c * per_class + i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = rng.normal(means(c, j), stddev[c]);
    }
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (classes < 1 || per_class < 1) throw Error(ErrorCode::kConfig, "synthetic: empty spec");
  if (audio_dim() < 1 || video_dim() < 1) throw Error(ErrorCode::kConfig, "synthetic: dims must be >= 1");
  if (audio_means.rows() != classes || video_means.rows() != classes ||
      audio_stddev.size() != classes || video_stddev.size() != classes)
    throw Error(ErrorCode::kShape, "synthetic: per-class parameters do not match class count");
  for (const auto& pair : confusable) {
    if (!(pair.multiplier > 0.0 && pair.multiplier <= 1.0))
      throw Error(ErrorCode::kConfig, "synthetic: multiplier must be in (0, 1], got " +
                                          std::to_string(pair.multiplier));
    if (pair.first < 0 || pair.second < 0 || static_cast<std::size_t>(pair.first) >= classes ||
        static_cast<std::size_t>(pair.second) >= classes || pair.first == pair.second)
      throw Error(ErrorCode::kIndex, "synthetic: bad confusable pair");
  }
}

void MultimodalDataset::validate() const {
  audio.validate();
  video.validate();
  if (audio.n() != video.n())
    throw Error(ErrorCode::kShape, "audio and video tables have different row counts");
  if (audio.labels != video.labels)
    throw Error(ErrorCode::kShape, "audio and video tables have different labels");
}

SyntheticSpec make_synthetic_spec(std::size_t classes, std::size_t per_class, std::size_t audio_dim,
                                  std::size_t video_dim, double separation, double stddev,
                                  std::vector<ConfusablePair> confusable, Rng& rng) {
  if (audio_dim < 1 || video_dim < 1) throw Error(ErrorCode::kConfig, "synthetic: dims must be >= 1");
  if (!(separation >= 0.0) || !std::isfinite(separation))
    throw Error(ErrorCode::kConfig, "synthetic: separation must be finite and >= 0");
  if (!(stddev >= 0.0) || !std::isfinite(stddev))
    throw Error(ErrorCode::kConfig, "synthetic: stddev must be finite and >= 0");
  SyntheticSpec spec;
  spec.classes = classes;
  spec.per_class = per_class;
  spec.audio_means = random_sphere_means(classes, audio_dim, separation, rng);
  spec.video_means = random_sphere_means(classes, video_dim, separation, rng);
  spec.audio_stddev.assign(classes, stddev);
  spec.video_stddev.assign(classes, stddev);
  spec.confusable = std::move(confusable);
  spec.validate();
  return spec;
}

Matrix effective_means(const Matrix& means, const std::vector<ConfusablePair>& confusable) {
  Matrix out = means;
  for (const auto& pair : confusable) {
    auto a = out.row(static_cast<std::size_t>(pair.first));
    auto b = out.row(static_cast<std::size_t>(pair.second));
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double mid = 0.5 * (a[j] + b[j]);
      // Written as a shift so that multiplier 1 leaves the means bit-identical.
      const double pull = 1.0 - pair.multiplier;
      a[j] += pull * (mid - a[j]);
      b[j] += pull * (mid - b[j]);
    }
  }
  return out;
}

MultimodalDataset generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  const Matrix audio_means = effective_means(spec.audio_means, spec.confusable);
  const Matrix video_means = effective_means(spec.video_means, spec.confusable);
  MultimodalDataset data;
  data.audio.features = sample_modality(audio_means, spec.audio_stddev, spec.per_class, rng);
  data.video.features = sample_modality(video_means, spec.video_stddev, spec.per_class, rng);
  data.audio.labels.resize(spec.classes * spec.per_class);
  for (std::size_t c = 0; c < spec.classes; ++c)
    for (std::size_t i = 0; i < spec.per_class; ++i)
      data.audio.labels[c * spec.per_class + i] = static_cast<std::int64_t>(c);
  data.video.labels = data.audio.labels;
  return data;
}

}  // namespace diccae
