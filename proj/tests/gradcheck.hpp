#pragma once

// Composite training loss through the fusion model, for finite-difference
// checks of the hand-written backward pass.

#include <cstddef>
#include <vector>

#include "diccae/fusion_model.hpp"
#include "diccae/losses.hpp"
#include "diccae/rng.hpp"
#include "test_util.hpp"

namespace diccae::testing {

struct CompositeProblem {
  Matrix audio;
  Matrix video;
  std::vector<int> labels;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  Matrix weights;  // C x C pair weights
  LossCoefficients coef{1.0, 0.7, 1.3};
  double confusion_temperature = 0.5;
  double infonce_temperature = 0.2;
};

inline CompositeProblem make_problem(std::size_t batch, std::size_t da, std::size_t dv, std::size_t classes,
                                     Rng& rng) {
  CompositeProblem p;
  p.audio = random_matrix(batch, da, rng);
  p.video = random_matrix(batch, dv, rng);
  for (std::size_t i = 0; i < batch; ++i) p.labels.push_back(static_cast<int>(i % classes));
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = i + 1; j < batch; ++j) p.pairs.emplace_back(i, j);
  p.weights = Matrix(classes, classes);
  for (std::size_t i = 0; i < classes; ++i)
    for (std::size_t j = i + 1; j < classes; ++j) p.weights(i, j) = p.weights(j, i) = rng.uniform(0.0, 2.0);
  return p;
}

struct CompositeResult {
  double value = 0.0;
  FusionModel::OutputGradients upstream;
  FusionModel::Cache cache;
};

inline CompositeResult composite_loss(const FusionModel& model, const CompositeProblem& p) {
  FusionModel::Output out = model.forward(p.audio, p.video);
  LossComponents parts;
  parts.classification = cross_entropy(out.logits, p.labels);
  parts.info_nce = info_nce(out.audio_emb, out.video_emb, p.infonce_temperature);
  PairBatch pb;
  pb.features_a = Matrix(p.pairs.size(), out.fused.cols());
  pb.features_b = Matrix(p.pairs.size(), out.fused.cols());
  for (std::size_t k = 0; k < p.pairs.size(); ++k) {
    for (std::size_t j = 0; j < out.fused.cols(); ++j) {
      pb.features_a(k, j) = out.fused(p.pairs[k].first, j);
      pb.features_b(k, j) = out.fused(p.pairs[k].second, j);
    }
    const int a = p.labels[p.pairs[k].first], b = p.labels[p.pairs[k].second];
    pb.class_pair.emplace_back(a, b);
    pb.same_class.push_back(a == b);
  }
  parts.diccae = diccae_loss(pb, p.weights, p.confusion_temperature);
  const TotalLoss total = total_loss(parts, p.coef);

  CompositeResult r;
  r.value = total.value;
  r.upstream.logits = total.weighted.classification.gradients[0];
  r.upstream.audio_emb = total.weighted.info_nce.gradients[0];
  r.upstream.video_emb = total.weighted.info_nce.gradients[1];
  r.upstream.fused = Matrix(out.fused.rows(), out.fused.cols());
  for (std::size_t k = 0; k < p.pairs.size(); ++k)
    for (std::size_t j = 0; j < out.fused.cols(); ++j) {
      r.upstream.fused(p.pairs[k].first, j) += total.weighted.diccae.gradients[0](k, j);
      r.upstream.fused(p.pairs[k].second, j) += total.weighted.diccae.gradients[1](k, j);
    }
  r.cache = std::move(out.cache);
  return r;
}

struct GradCheckSummary {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst = 0.0;
};

// Central differences at `coords` random parameter coordinates, plus the
// same number of input coordinates on the audio and video batches.
inline GradCheckSummary check_model_gradients(FusionModel& model, CompositeProblem& p, std::size_t coords,
                                              Rng& rng, double step = 1e-5, double tol = 1e-4) {
  const CompositeResult base = composite_loss(model, p);
  FusionModel::Gradients g = model.backward(base.cache, base.upstream);
  const auto params = model.parameter_blocks();
  const auto grads = g.blocks();
  std::vector<std::pair<std::size_t, std::size_t>> flat;
  for (std::size_t b = 0; b < params.size(); ++b)
    for (std::size_t i = 0; i < params[b].size(); ++i) flat.emplace_back(b, i);

  GradCheckSummary s;
  const auto record = [&](double analytic, double numeric) {
    const double err = relative_error(analytic, numeric);
    s.worst = std::max(s.worst, err);
    ++s.checked;
    if (!(err < tol)) ++s.failed;
  };
  const auto eval = [&] { return composite_loss(model, p).value; };
  for (std::size_t t = 0; t < coords; ++t) {
    const auto [b, i] = flat[rng.uniform_index(flat.size())];
    record(grads[b][i], central_difference(eval, params[b][i], step));
  }
  for (std::size_t t = 0; t < coords; ++t) {
    const std::size_t k = rng.uniform_index(p.audio.size());
    record(g.audio_input.values()[k], central_difference(eval, p.audio.values()[k], step));
    const std::size_t m = rng.uniform_index(p.video.size());
    record(g.video_input.values()[m], central_difference(eval, p.video.values()[m], step));
  }
  return s;
}

}  // namespace diccae::testing
