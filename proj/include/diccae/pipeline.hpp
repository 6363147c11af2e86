#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diccae/config.hpp"
#include "diccae/confusion.hpp"
#include "diccae/fusion_model.hpp"
#include "diccae/losses.hpp"
#include "diccae/rng.hpp"
#include "diccae/synthetic.hpp"

namespace diccae {

struct DataSplits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> update;
  std::vector<std::size_t> eval;
};

// Stratified three-way split. Per label, round(fraction * count) samples go
// to the update split and round(eval_fraction * count) to eval, each at least
// one, with at least one left for training.
DataSplits split_update_set(std::span<const std::int64_t> labels, double update_fraction,
                            double eval_fraction, Rng& rng);

struct PairIndex {
  std::size_t first = 0;
  std::size_t second = 0;
};

// Draws `count` index pairs into `labels`: round(positive_fraction * count)
// same-class pairs (class uniform among those with >= 2 members) and the rest
// cross-class (ordered class pair uniform among available ones), shuffled.
std::vector<PairIndex> sample_pair_indices(std::span<const int> labels, std::size_t count, Rng& rng,
                                           double positive_fraction = 0.5);

PairBatch sample_pair_batch(const Matrix& features, std::span<const int> labels,
                            std::size_t batch_size, Rng& rng, double positive_fraction = 0.5);

enum class Phase { kSelfSupervised, kSupervised };
std::string_view phase_name(Phase phase);

struct EvalResult {
  double accuracy = 0.0;
  std::size_t total = 0;
  Matrix confusion_counts;  // [true][predicted]
  ConfusionMatrix confusion;
  ConfusionStats stats;
  EmbeddingTable fused;  // fused features with true labels
};

struct EpochReport {
  std::size_t epoch = 0;
  Phase phase = Phase::kSupervised;
  // Coefficient-weighted epoch means.
  double loss_total = 0.0;
  double loss_classification = 0.0;
  double loss_infonce = 0.0;
  double loss_diccae = 0.0;
  // Update-split confusion distribution at the end of the epoch.
  double confusion_mean = 0.0;
  double confusion_variance = 0.0;
  double churn = 0.0;
  bool refined = false;
  double seconds = 0.0;

  // Pair weights applied during this epoch, and the raw update-split matrix
  // (end of the previous epoch) they were derived from. Both dense over all
  // classes; the raw matrix is empty on a cold start.
  Matrix applied_weights;
  Matrix source_raw;
  std::vector<bool> source_present;  // classes present in the update split
  Matrix end_raw;                    // raw matrix computed at the end of this epoch
  std::vector<bool> end_present;
};

struct PhaseResult {
  FusionModel model;
  std::vector<EpochReport> reports;
  std::vector<int> pseudo_labels;  // self-supervised phase: final labels for every sample
  std::optional<EvalResult> eval;
};

// Largest off-diagonal upper-triangle entry; ties go to the first pair in
// row-major order. Only pairs with both classes marked present count when
// `present` is nonempty. Returns (-1, -1) when there is no such pair.
std::pair<int, int> argmax_pair(const Matrix& m, const std::vector<bool>& present = {});

// Coefficients after applying the ablation switches for `phase`.
LossCoefficients effective_coefficients(const TrainConfig& config, Phase phase);

// Fraction of positions where the two label vectors differ.
double label_churn(std::span<const int> before, std::span<const int> after);

EvalResult evaluate(const FusionModel& model, const MultimodalDataset& data,
                    std::span<const std::size_t> indices, double coverage = kDefaultCoverage,
                    std::size_t bins = 40);

// Creates the model from the data shapes, clusters fused features into
// pseudo-labels and trains on them. Labels in `data` are ignored.
PhaseResult run_selfsupervised_phase(const TrainConfig& config, const MultimodalDataset& data,
                                     std::optional<FusionModel> initial = std::nullopt);

// Fine-tunes `model` on the true labels; replaces its classifier when the
// class count differs. Reports final eval-split accuracy.
PhaseResult run_supervised_phase(const TrainConfig& config, const MultimodalDataset& data,
                                 FusionModel model);

struct TrainingRun {
  std::optional<FusionModel> model;
  std::vector<EpochReport> reports;
  std::optional<EvalResult> eval;
  DataSplits splits;
};

// Self-supervised then supervised phase; either is skipped at zero epochs.
TrainingRun run_training(const TrainConfig& config, const MultimodalDataset& data);

// Split used by both phases for this config and data.
DataSplits splits_for(const TrainConfig& config, const MultimodalDataset& data);

FusionDims dims_for(const TrainConfig& config, const MultimodalDataset& data, std::size_t classes);

}  // namespace diccae
