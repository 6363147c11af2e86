#include "diccae/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "diccae/adam.hpp"
#include "diccae/errors.hpp"
#include "diccae/kmeans.hpp"

namespace diccae {
namespace {

// Independent RNG streams per purpose, so that switching one loss term off
// does not shift the random draws of any other part of the run.
enum Stream : std::uint64_t {
  kSplitStream = 1,
  kInitStream,
  kSelfBatchStream,
  kSelfPairStream,
  kKMeansStream,
  kSupBatchStream,
  kSupPairStream,
  kClassifierStream,
};

Rng stream_rng(const TrainConfig& config, Stream stream) { return Rng(mix_seed(config.seed, stream)); }

Matrix uniform_weights(std::size_t classes) {
  Matrix w(classes, classes, 1.0);
  for (std::size_t i = 0; i < classes; ++i) w(i, i) = 0.0;
  return w;
}

struct EpochLosses {
  double total = 0.0;
  double classification = 0.0;
  double infonce = 0.0;
  double diccae = 0.0;
};

// Pairs for one minibatch, with the composition relaxed when the batch cannot
// supply same-class or cross-class pairs. Empty when it can supply neither.
std::vector<PairIndex> batch_pairs(std::span<const int> labels, const TrainConfig& config, Rng& rng) {
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  const bool has_positive =
      std::any_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second >= 2; });
  const bool has_negative = counts.size() >= 2;
  if (!has_positive && !has_negative) return {};
  double fraction = config.positive_fraction;
  if (!has_positive) fraction = 0.0;
  if (!has_negative) fraction = 1.0;
  return sample_pair_indices(labels, config.pair_batch_size, rng, fraction);
}

EpochLosses train_epoch(FusionModel& model, AdamState& adam, const MultimodalDataset& data,
                        std::span<const std::size_t> train, std::span<const int> labels,
                        const Matrix& weights, const LossCoefficients& coef, const TrainConfig& config,
                        Rng& batch_rng, Rng& pair_rng) {
  std::vector<std::size_t> order(train.begin(), train.end());
  batch_rng.shuffle(std::span<std::size_t>(order));
  EpochLosses sums;
  std::size_t batches = 0;
  for (std::size_t start = 0; start + 2 <= order.size(); start += config.batch_size) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    if (end - start < 2) break;  // InfoNCE needs two rows
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    const FusionModel::Output out =
        model.forward(data.audio.features.select_rows(idx), data.video.features.select_rows(idx));

    std::vector<int> batch_labels(idx.size());
    bool labeled = true;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      batch_labels[k] = labels[idx[k]];
      labeled = labeled && batch_labels[k] >= 0;
    }

    LossComponents parts;
    std::vector<PairIndex> pairs;
    if (labeled) {
      // Drawn even when the pair term is switched off, to keep the stream aligned.
      pairs = batch_pairs(batch_labels, config, pair_rng);
      if (coef.classification > 0.0) parts.classification = cross_entropy(out.logits, batch_labels);
      if (coef.diccae > 0.0 && !pairs.empty()) {
        PairBatch pb;
        pb.features_a = Matrix(pairs.size(), out.fused.cols());
        pb.features_b = Matrix(pairs.size(), out.fused.cols());
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          std::copy_n(out.fused.row(pairs[k].first).begin(), out.fused.cols(), pb.features_a.row(k).begin());
          std::copy_n(out.fused.row(pairs[k].second).begin(), out.fused.cols(), pb.features_b.row(k).begin());
          const int a = batch_labels[pairs[k].first];
          const int b = batch_labels[pairs[k].second];
          pb.class_pair.emplace_back(a, b);
          pb.same_class.push_back(a == b);
        }
        parts.diccae = diccae_loss(pb, weights, config.confusion_temperature);
      }
    }
    if (coef.info_nce > 0.0) parts.info_nce = info_nce(out.audio_emb, out.video_emb, config.infonce_temperature);

    const TotalLoss total = total_loss(parts, coef);
    FusionModel::OutputGradients upstream;
    if (!total.weighted.classification.gradients.empty())
      upstream.logits = total.weighted.classification.gradients[0];
    if (!total.weighted.info_nce.gradients.empty()) {
      upstream.audio_emb = total.weighted.info_nce.gradients[0];
      upstream.video_emb = total.weighted.info_nce.gradients[1];
    }
    if (!total.weighted.diccae.gradients.empty()) {
      upstream.fused = Matrix(out.fused.rows(), out.fused.cols());
      const Matrix& ga = total.weighted.diccae.gradients[0];
      const Matrix& gb = total.weighted.diccae.gradients[1];
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        auto ra = upstream.fused.row(pairs[k].first);
        auto rb = upstream.fused.row(pairs[k].second);
        for (std::size_t j = 0; j < ra.size(); ++j) {
          ra[j] += ga(k, j);
          rb[j] += gb(k, j);
        }
      }
    }

    FusionModel::Gradients grads = model.backward(out.cache, upstream);
    const auto params = model.parameter_blocks();
    const auto grad_blocks = grads.blocks();
    adam_step(params, grad_blocks, adam);
    model.bump_version();

    sums.total += total.value;
    sums.classification += total.weighted.classification.value;
    sums.infonce += total.weighted.info_nce.value;
    sums.diccae += total.weighted.diccae.value;
    ++batches;
  }
  if (batches > 0) {
    const double inv = 1.0 / static_cast<double>(batches);
    sums.total *= inv;
    sums.classification *= inv;
    sums.infonce *= inv;
    sums.diccae *= inv;
  }
  return sums;
}

Matrix fused_rows(const FusionModel& model, const MultimodalDataset& data, std::span<const std::size_t> idx) {
  return model.fused_features(data.audio.features.select_rows(idx), data.video.features.select_rows(idx));
}

// Update-split confusion: dense raw matrix over `classes` (absent classes get
// zero rows), dense normalized weights (pairs touching an absent class get the
// neutral weight 1), presence flags and the distribution stats.
struct UpdateConfusion {
  bool valid = false;
  Matrix raw;
  Matrix weights;
  std::vector<bool> present;
  ConfusionStats stats;
};

UpdateConfusion update_confusion(const FusionModel& model, const MultimodalDataset& data,
                                 std::span<const std::size_t> update, std::span<const int> labels,
                                 std::size_t classes, const TrainConfig& config) {
  UpdateConfusion uc;
  std::vector<std::size_t> rows;
  std::vector<std::int64_t> row_labels;
  for (std::size_t i : update) {
    if (labels[i] < 0) continue;
    rows.push_back(i);
    row_labels.push_back(labels[i]);
  }
  uc.present.assign(classes, false);
  for (auto l : row_labels) uc.present[static_cast<std::size_t>(l)] = true;
  if (std::count(uc.present.begin(), uc.present.end(), true) < 2) return uc;

  const ConfusionMatrix cm = build_confusion_matrix(fused_rows(model, data, rows), row_labels, config.coverage);
  uc.valid = true;
  uc.raw = Matrix(classes, classes);
  uc.weights = uniform_weights(classes);
  for (std::size_t a = 0; a < cm.class_ids.size(); ++a)
    for (std::size_t b = 0; b < cm.class_ids.size(); ++b) {
      const auto i = static_cast<std::size_t>(cm.class_ids[a]);
      const auto j = static_cast<std::size_t>(cm.class_ids[b]);
      uc.raw(i, j) = cm.raw(a, b);
      if (a != b) uc.weights(i, j) = cm.normalized(a, b);
    }
  uc.stats = confusion_stats(cm, config.hist_bins);
  return uc;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void require_labels_in_range(const EmbeddingTable& table) {
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    if (table.labels[i] < 0)
      throw Error(ErrorCode::kUnlabeled, "supervised training needs labels; row " + std::to_string(i) + " is unlabeled");
    if (table.labels[i] > std::numeric_limits<int>::max())
      throw Error(ErrorCode::kLabelRange, "label too large at row " + std::to_string(i));
  }
}

std::size_t class_count(const EmbeddingTable& table) {
  std::int64_t mx = -1;
  for (auto l : table.labels) mx = std::max(mx, l);
  return static_cast<std::size_t>(mx + 1);
}

}  // namespace

std::string_view phase_name(Phase phase) {
  return phase == Phase::kSelfSupervised ? "selfsup" : "supervised";
}

DataSplits split_update_set(std::span<const std::int64_t> labels, double update_fraction,
                            double eval_fraction, Rng& rng) {
  if (!(update_fraction > 0.0 && update_fraction < 1.0) || !(eval_fraction > 0.0 && eval_fraction < 1.0))
    throw Error(ErrorCode::kConfig, "split fractions must be in (0, 1)");
  std::map<std::int64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  DataSplits s;
  for (auto& [label, members] : groups) {
    const auto n = static_cast<double>(members.size());
    const auto n_update = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(update_fraction * n)));
    const auto n_eval = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(eval_fraction * n)));
    if (n_update + n_eval >= members.size()) {
      throw Error(ErrorCode::kStratification,
                  "class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                      " samples, too few to appear in train, update and eval splits");
    }
    rng.shuffle(std::span<std::size_t>(members));
    s.update.insert(s.update.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_update));
    s.eval.insert(s.eval.end(), members.begin() + static_cast<std::ptrdiff_t>(n_update),
                  members.begin() + static_cast<std::ptrdiff_t>(n_update + n_eval));
    s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_update + n_eval), members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.update.begin(), s.update.end());
  std::sort(s.eval.begin(), s.eval.end());
  return s;
}

std::vector<PairIndex> sample_pair_indices(std::span<const int> labels, std::size_t count, Rng& rng,
                                           double positive_fraction) {
  if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0))
    throw Error(ErrorCode::kConfig, "positive_fraction must be in [0, 1]");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  std::vector<const std::vector<std::size_t>*> classes;
  std::vector<const std::vector<std::size_t>*> positive_classes;
  for (const auto& [label, rows] : members) {
    classes.push_back(&rows);
    if (rows.size() >= 2) positive_classes.push_back(&rows);
  }
  const auto n_pos = static_cast<std::size_t>(std::llround(positive_fraction * static_cast<double>(count)));
  const std::size_t n_neg = count - n_pos;
  if (n_pos > 0 && positive_classes.empty())
    throw Error(ErrorCode::kSampling, "same-class pairs requested but no class has two samples");
  if (n_neg > 0 && classes.size() < 2)
    throw Error(ErrorCode::kSampling, "cross-class pairs requested but fewer than two classes present");

  std::vector<PairIndex> pairs;
  pairs.reserve(count);
  for (std::size_t k = 0; k < n_pos; ++k) {
    const auto& rows = *positive_classes[rng.uniform_index(positive_classes.size())];
    const auto a = rng.uniform_index(rows.size());
    auto b = rng.uniform_index(rows.size() - 1);
    if (b >= a) ++b;
    pairs.push_back({rows[a], rows[b]});
  }
  for (std::size_t k = 0; k < n_neg; ++k) {
    const auto ca = rng.uniform_index(classes.size());
    auto cb = rng.uniform_index(classes.size() - 1);
    if (cb >= ca) ++cb;
    const auto& ra = *classes[ca];
    const auto& rb = *classes[cb];
    pairs.push_back({ra[rng.uniform_index(ra.size())], rb[rng.uniform_index(rb.size())]});
  }
  rng.shuffle(std::span<PairIndex>(pairs));
  return pairs;
}

PairBatch sample_pair_batch(const Matrix& features, std::span<const int> labels, std::size_t batch_size,
                            Rng& rng, double positive_fraction) {
  if (labels.size() != features.rows()) throw Error(ErrorCode::kShape, "labels and feature rows disagree");
  const auto pairs = sample_pair_indices(labels, batch_size, rng, positive_fraction);
  PairBatch pb;
  pb.features_a = Matrix(pairs.size(), features.cols());
  pb.features_b = Matrix(pairs.size(), features.cols());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    std::copy_n(features.row(pairs[k].first).begin(), features.cols(), pb.features_a.row(k).begin());
    std::copy_n(features.row(pairs[k].second).begin(), features.cols(), pb.features_b.row(k).begin());
    const int a = labels[pairs[k].first];
    const int b = labels[pairs[k].second];
    pb.class_pair.emplace_back(a, b);
    pb.same_class.push_back(a == b);
  }
  return pb;
}

std::pair<int, int> argmax_pair(const Matrix& m, const std::vector<bool>& present) {
  std::pair<int, int> best{-1, -1};
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      if (!present.empty() && !(present[i] && present[j])) continue;
      if (m(i, j) > best_v) {
        best_v = m(i, j);
        best = {static_cast<int>(i), static_cast<int>(j)};
      }
    }
  return best;
}

LossCoefficients effective_coefficients(const TrainConfig& config, Phase phase) {
  LossCoefficients c = config.coefficients;
  if (config.ablations.no_confusion_loss) c.diccae = 0.0;
  if (config.ablations.no_infonce) c.info_nce = 0.0;
  if (phase == Phase::kSelfSupervised && config.ablations.no_cluster_guidance) {
    c.classification = 0.0;
    c.diccae = 0.0;
  }
  return c;
}

double label_churn(std::span<const int> before, std::span<const int> after) {
  if (before.size() != after.size()) throw Error(ErrorCode::kShape, "churn: label vectors differ in length");
  if (before.empty()) return 0.0;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < before.size(); ++i) changed += before[i] != after[i] ? 1 : 0;
  return static_cast<double>(changed) / static_cast<double>(before.size());
}

EvalResult evaluate(const FusionModel& model, const MultimodalDataset& data,
                    std::span<const std::size_t> indices, double coverage, std::size_t bins) {
  if (indices.empty()) throw Error(ErrorCode::kEmptyInput, "evaluation split is empty");
  const auto out =
      model.forward(data.audio.features.select_rows(indices), data.video.features.select_rows(indices));
  EvalResult r;
  r.total = indices.size();
  std::vector<std::int64_t> truth(indices.size());
  std::size_t classes = model.num_classes();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    truth[k] = data.audio.labels[indices[k]];
    if (truth[k] < 0) throw Error(ErrorCode::kUnlabeled, "evaluation needs labeled samples");
    classes = std::max(classes, static_cast<std::size_t>(truth[k] + 1));
  }
  r.confusion_counts = Matrix(classes, classes);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto row = out.logits.row(k);
    const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const auto t = static_cast<std::size_t>(truth[k]);
    r.confusion_counts(t, pred) += 1.0;
    correct += pred == t ? 1 : 0;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  r.fused.features = out.fused;
  r.fused.labels = truth;
  std::vector<std::int64_t> distinct = truth;
  std::sort(distinct.begin(), distinct.end());
  if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() >= 2) {
    r.confusion = build_confusion_matrix(out.fused, truth, coverage);
    r.stats = confusion_stats(r.confusion, bins);
  }
  return r;
}

FusionDims dims_for(const TrainConfig& config, const MultimodalDataset& data, std::size_t classes) {
  FusionDims d;
  d.audio_dim = data.audio.d();
  d.video_dim = data.video.d();
  d.embedding_dim = config.embedding_dim;
  d.encoder_hidden = config.encoder_hidden;
  d.encoder_layers = config.encoder_layers;
  d.fusion_hidden = config.fusion_hidden;
  d.num_classes = classes;
  return d;
}

DataSplits splits_for(const TrainConfig& config, const MultimodalDataset& data) {
  std::vector<std::int64_t> strata = data.audio.labels;
  if (!data.audio.fully_labeled()) std::fill(strata.begin(), strata.end(), kUnlabeled);
  Rng rng = stream_rng(config, kSplitStream);
  return split_update_set(strata, config.update_fraction, config.eval_fraction, rng);
}

PhaseResult run_selfsupervised_phase(const TrainConfig& config, const MultimodalDataset& data,
                                     std::optional<FusionModel> initial) {
  config.validate();
  data.validate();
  const DataSplits splits = splits_for(config, data);
  const std::size_t k = config.kmeans_k;
  const bool guided = !config.ablations.no_cluster_guidance;
  if (guided && splits.train.size() < k) {
    throw Error(ErrorCode::kInsufficientPoints, "k-means with k=" + std::to_string(k) + " on a training split of " +
                                                    std::to_string(splits.train.size()));
  }

  PhaseResult result;
  if (initial) {
    result.model = std::move(*initial);
  } else {
    Rng init = stream_rng(config, kInitStream);
    result.model = FusionModel(dims_for(config, data, k), init);
  }
  if (result.model.num_classes() != k) {
    Rng reset = stream_rng(config, kClassifierStream);
    result.model.reset_classifier(k, reset);
  }
  FusionModel& model = result.model;

  const LossCoefficients coef = effective_coefficients(config, Phase::kSelfSupervised);
  std::vector<int> labels(data.size(), -1);
  std::vector<int> train_labels;
  Matrix weights = uniform_weights(k);
  Matrix prev_raw;
  std::vector<bool> prev_present;
  AdamState adam;
  adam.options.lr = config.lr;
  Rng batch_rng = stream_rng(config, kSelfBatchStream);
  Rng pair_rng = stream_rng(config, kSelfPairStream);

  for (std::size_t epoch = 1; epoch <= config.selfsup_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochReport report;
    report.epoch = epoch;
    report.phase = Phase::kSelfSupervised;

    const bool refine = guided && (epoch == 1 || (!config.ablations.no_refinement &&
                                                  should_refine(epoch, config.refine_period)));
    if (refine) {
      Rng krng(mix_seed(config.seed, kKMeansStream) + epoch);
      KMeansResult km = kmeans(fused_rows(model, data, splits.train), k, krng,
                               {config.kmeans_restarts, config.kmeans_max_iters, Exec::kParallel});
      std::vector<int> fresh = km.assignments;
      Matrix centroids = km.centroids;
      if (!train_labels.empty()) {
        // Keep cluster ids stable across refinements so the classifier and
        // the confusion weights keep their meaning.
        const std::vector<int> mapping = match_labels(fresh, train_labels, k);
        for (int& l : fresh) l = mapping[static_cast<std::size_t>(l)];
        for (std::size_t c = 0; c < k; ++c)
          std::copy_n(km.centroids.row(c).begin(), centroids.cols(),
                      centroids.row(static_cast<std::size_t>(mapping[c])).begin());
        report.churn = label_churn(train_labels, fresh);
      }
      train_labels = fresh;
      for (std::size_t t = 0; t < splits.train.size(); ++t) labels[splits.train[t]] = train_labels[t];
      const std::vector<int> update_labels =
          assign_to_centroids(fused_rows(model, data, splits.update), centroids);
      for (std::size_t u = 0; u < splits.update.size(); ++u) labels[splits.update[u]] = update_labels[u];
      report.refined = true;
    }

    report.applied_weights = weights;
    report.source_raw = prev_raw;
    report.source_present = prev_present;
    adam.options.lr = config.lr * std::pow(config.lr_decay, static_cast<double>(epoch - 1));
    const EpochLosses losses =
        train_epoch(model, adam, data, splits.train, labels, weights, coef, config, batch_rng, pair_rng);
    report.loss_total = losses.total;
    report.loss_classification = losses.classification;
    report.loss_infonce = losses.infonce;
    report.loss_diccae = losses.diccae;

    if (guided) {
      const UpdateConfusion uc = update_confusion(model, data, splits.update, labels, k, config);
      if (uc.valid) {
        report.confusion_mean = uc.stats.mean;
        report.confusion_variance = uc.stats.variance;
        report.end_raw = uc.raw;
        report.end_present = uc.present;
        if (!config.ablations.no_dynamic_weighting) {
          weights = uc.weights;
          prev_raw = uc.raw;
          prev_present = uc.present;
        }
      }
    }
    report.seconds = seconds_since(t0);
    result.reports.push_back(std::move(report));
  }
  result.pseudo_labels = labels;
  return result;
}

PhaseResult run_supervised_phase(const TrainConfig& config, const MultimodalDataset& data, FusionModel model) {
  config.validate();
  data.validate();
  require_labels_in_range(data.audio);
  if (model.audio_dim() != data.audio.d() || model.video_dim() != data.video.d())
    throw Error(ErrorCode::kDimension, "model input widths do not match the dataset");
  const DataSplits splits = splits_for(config, data);
  const std::size_t classes = class_count(data.audio);

  PhaseResult result;
  result.model = std::move(model);
  FusionModel& m = result.model;
  if (m.num_classes() != classes) {
    Rng reset = stream_rng(config, kClassifierStream);
    m.reset_classifier(classes, reset);
  }

  std::vector<int> labels(data.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(data.audio.labels[i]);

  const LossCoefficients coef = effective_coefficients(config, Phase::kSupervised);
  Matrix weights = uniform_weights(classes);
  Matrix prev_raw;
  std::vector<bool> prev_present;
  AdamState adam;
  Rng batch_rng = stream_rng(config, kSupBatchStream);
  Rng pair_rng = stream_rng(config, kSupPairStream);

  for (std::size_t epoch = 1; epoch <= config.sup_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochReport report;
    report.epoch = epoch;
    report.phase = Phase::kSupervised;
    report.applied_weights = weights;
    report.source_raw = prev_raw;
    report.source_present = prev_present;
    adam.options.lr = config.lr * std::pow(config.lr_decay, static_cast<double>(epoch - 1));
    const EpochLosses losses =
        train_epoch(m, adam, data, splits.train, labels, weights, coef, config, batch_rng, pair_rng);
    report.loss_total = losses.total;
    report.loss_classification = losses.classification;
    report.loss_infonce = losses.infonce;
    report.loss_diccae = losses.diccae;

    const UpdateConfusion uc = update_confusion(m, data, splits.update, labels, classes, config);
    if (uc.valid) {
      report.confusion_mean = uc.stats.mean;
      report.confusion_variance = uc.stats.variance;
      report.end_raw = uc.raw;
      report.end_present = uc.present;
      if (!config.ablations.no_dynamic_weighting) {
        weights = uc.weights;
        prev_raw = uc.raw;
        prev_present = uc.present;
      }
    }
    report.seconds = seconds_since(t0);
    result.reports.push_back(std::move(report));
  }
  result.eval = evaluate(m, data, splits.eval, config.coverage, config.hist_bins);
  return result;
}

TrainingRun run_training(const TrainConfig& config, const MultimodalDataset& data) {
  config.validate();
  data.validate();
  TrainingRun run;
  run.splits = splits_for(config, data);
  if (config.selfsup_epochs > 0) {
    PhaseResult self = run_selfsupervised_phase(config, data);
    run.reports = std::move(self.reports);
    run.model = std::move(self.model);
  }
  if (config.sup_epochs > 0) {
    require_labels_in_range(data.audio);
    if (!run.model) {
      Rng init = stream_rng(config, kInitStream);
      run.model = FusionModel(dims_for(config, data, class_count(data.audio)), init);
    }
    PhaseResult sup = run_supervised_phase(config, data, std::move(*run.model));
    for (auto& r : sup.reports) run.reports.push_back(std::move(r));
    run.model = std::move(sup.model);
    run.eval = std::move(sup.eval);
  }
  return run;
}

}  // namespace diccae
