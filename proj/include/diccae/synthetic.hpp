#pragma once

#include <cstddef>
#include <vector>

#include "diccae/matrix.hpp"
#include "diccae/rng.hpp"
#include "diccae/table.hpp"

namespace diccae {

struct ConfusablePair {
  int first = 0;
  int second = 0;
  double multiplier = 1.0;  // in (0, 1]; 1 leaves the means unchanged
};

struct SyntheticSpec {
  std::size_t classes = 0;
  std::size_t per_class = 0;
  Matrix audio_means;  // classes x audio_dim
  Matrix video_means;  // classes x video_dim
  Vector audio_stddev; // per class
  Vector video_stddev; // per class
  std::vector<ConfusablePair> confusable;

  std::size_t audio_dim() const { return audio_means.cols(); }
  std::size_t video_dim() const { return video_means.cols(); }
  void validate() const;
};

// Paired audio/video tables sharing one label column.
struct MultimodalDataset {
  EmbeddingTable audio;
  EmbeddingTable video;

  std::size_t size() const { return audio.n(); }
  void validate() const;
};

// Class means drawn uniformly on a sphere of radius `separation`, shared
// standard deviation `stddev`.
SyntheticSpec make_synthetic_spec(std::size_t classes, std::size_t per_class, std::size_t audio_dim,
                                  std::size_t video_dim, double separation, double stddev,
                                  std::vector<ConfusablePair> confusable, Rng& rng);

// Means after pulling every confusable pair toward its midpoint by its multiplier.
Matrix effective_means(const Matrix& means, const std::vector<ConfusablePair>& confusable);

// Gaussian clusters per class and modality. Rows are grouped by class.
MultimodalDataset generate_synthetic(const SyntheticSpec& spec, Rng& rng);

}  // namespace diccae
