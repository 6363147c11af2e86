#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "diccae/losses.hpp"

namespace diccae {

struct AblationFlags {
  bool no_confusion_loss = false;
  bool no_dynamic_weighting = false;
  bool no_infonce = false;
  bool no_refinement = false;
  bool no_cluster_guidance = false;

  bool operator==(const AblationFlags&) const = default;
};

struct TrainConfig {
  std::uint64_t seed = 1;

  std::size_t selfsup_epochs = 20;
  std::size_t sup_epochs = 30;
  std::size_t batch_size = 32;
  std::size_t pair_batch_size = 32;
  double positive_fraction = 0.5;

  // Desk-scale default; 300 is the large-corpus setting.
  std::size_t kmeans_k = 16;
  std::size_t kmeans_restarts = 20;
  std::size_t kmeans_max_iters = 100;
  std::size_t refine_period = 10;

  double update_fraction = 0.2;
  double eval_fraction = 0.2;

  LossCoefficients coefficients;
  AblationFlags ablations;

  double confusion_temperature = kDefaultConfusionTemperature;
  double infonce_temperature = kDefaultInfoNceTemperature;
  double lr = 1e-4;
  double lr_decay = 0.97;  // multiplied in once per epoch

  std::size_t embedding_dim = 32;
  std::size_t encoder_hidden = 64;
  std::size_t encoder_layers = 2;
  std::size_t fusion_hidden = 64;

  double coverage = 0.95;
  std::size_t hist_bins = 40;

  // Throws kConfig naming the offending key.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

// `key = value` lines, `#` starts a comment, blank lines ignored. Unknown keys,
// duplicate keys and unparsable values are kConfig errors naming the key.
TrainConfig parse_config(std::istream& in);
TrainConfig load_config(const std::filesystem::path& path);

// Every key with its value, in a stable order; parse_config reads it back.
std::string format_config(const TrainConfig& config);

}  // namespace diccae
