#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include "diccae/adam.hpp"
#include "diccae/errors.hpp"
#include "diccae/fusion_model.hpp"
#include "diccae/losses.hpp"
#include "diccae/mlp.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

namespace diccae {
namespace {

using testing::random_matrix;

FusionDims small_dims() {
  FusionDims d;
  d.audio_dim = 8;
  d.video_dim = 8;
  d.embedding_dim = 8;
  d.encoder_hidden = 8;
  d.encoder_layers = 1;
  d.fusion_hidden = 8;
  d.num_classes = 4;
  return d;
}

TEST(Mlp, ParameterCountAndGlorotBounds) {
  Mlp m({5, 7, 3});
  EXPECT_EQ(m.parameter_count(), (5u + 1) * 7 + (7u + 1) * 3);
  Rng rng(1);
  m.init_glorot(rng);
  const double bound0 = std::sqrt(6.0 / 12.0);
  for (double w : m.layers()[0].weight.values()) EXPECT_LE(std::abs(w), bound0);
  for (double b : m.layers()[1].bias) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(m.activation_of(0), Activation::kRelu);
  EXPECT_EQ(m.activation_of(1), Activation::kIdentity);
}

TEST(Mlp, IdentityLayerReproducesInput) {
  Mlp m({3, 3}, Activation::kRelu, Activation::kIdentity);
  m.layers()[0].weight = Matrix::identity(3);
  const Matrix x = Matrix::from_rows({{1, -2, 3}, {0.5, 0, -1}});
  EXPECT_EQ(m.forward(x), x);
}

TEST(Mlp, RejectsBadShapes) {
  EXPECT_THROW(Mlp({4}), Error);
  Mlp m({2, 3});
  EXPECT_THROW(m.forward(Matrix(1, 3)), Error);
}

TEST(FusionModel, ShapesAndTapDimension) {
  Rng rng(2);
  FusionDims d = small_dims();
  d.video_dim = 5;
  d.fusion_hidden = 6;
  const FusionModel model(d, rng);
  EXPECT_EQ(model.fusion_head().input_dim(), 2 * d.embedding_dim);
  const auto out = model.forward(random_matrix(3, 8, rng), random_matrix(3, 5, rng));
  EXPECT_EQ(out.audio_emb.cols(), 8u);
  EXPECT_EQ(out.video_emb.cols(), 8u);
  EXPECT_EQ(out.fused.cols(), 6u);
  EXPECT_EQ(out.logits.cols(), 4u);
  for (double v : out.fused.values()) EXPECT_GE(v, 0.0);
}

TEST(FusionModel, ZeroWeightsGiveUniformSoftmax) {
  Rng rng(3);
  FusionModel model(small_dims(), rng);
  for (auto block : model.parameter_blocks())
    for (double& v : block) v = 0.0;
  const auto out = model.forward(random_matrix(4, 8, rng), random_matrix(4, 8, rng));
  for (double v : out.logits.values()) EXPECT_EQ(v, 0.0);
  const std::vector<int> labels{0, 1, 2, 3};
  EXPECT_NEAR(cross_entropy(out.logits, labels).value, std::log(4.0), 1e-12);
}

TEST(FusionModel, MismatchedBatchRejected) {
  Rng rng(4);
  const FusionModel model(small_dims(), rng);
  try {
    model.forward(random_matrix(3, 8, rng), random_matrix(2, 8, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimension);
  }
}

TEST(FusionModel, RowDuplicationDuplicatesOutputs) {
  Rng rng(5);
  const FusionModel model(small_dims(), rng);
  const Matrix a = random_matrix(3, 8, rng), v = random_matrix(3, 8, rng);
  const std::vector<std::size_t> twice{0, 1, 2, 0, 1, 2};
  const auto one = model.forward(a, v);
  const auto two = model.forward(a.select_rows(twice), v.select_rows(twice));
  EXPECT_EQ(two.logits, one.logits.select_rows(twice));
  EXPECT_EQ(two.fused, one.fused.select_rows(twice));
  EXPECT_EQ(model.fused_features(a, v), one.fused);
}

TEST(FusionModel, ZeroUpstreamGivesZeroGradients) {
  Rng rng(6);
  FusionModel model(small_dims(), rng);
  const auto out = model.forward(random_matrix(4, 8, rng), random_matrix(4, 8, rng));
  FusionModel::Gradients g = model.backward(out.cache, {});
  for (auto block : g.blocks())
    for (double v : block) EXPECT_EQ(v, 0.0);
}

TEST(FusionModel, StaleOrForeignCacheRejected) {
  Rng rng(7);
  FusionModel model(small_dims(), rng);
  FusionModel other(small_dims(), rng);
  const auto out = model.forward(random_matrix(2, 8, rng), random_matrix(2, 8, rng));
  try {
    other.backward(out.cache, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCache);
  }
  model.bump_version();
  try {
    model.backward(out.cache, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCache);
  }
}

TEST(FusionModel, BatchGradientIsSumOfPerSample) {
  Rng rng(8);
  FusionModel model(small_dims(), rng);
  const Matrix a = random_matrix(3, 8, rng), v = random_matrix(3, 8, rng);
  const Matrix gl = random_matrix(3, 4, rng), gf = random_matrix(3, 8, rng);
  const auto full = model.forward(a, v);
  FusionModel::Gradients whole = model.backward(full.cache, {{}, {}, gf, gl});
  std::vector<double> summed;
  for (std::size_t r = 0; r < 3; ++r) {
    const std::vector<std::size_t> idx{r};
    const auto out = model.forward(a.select_rows(idx), v.select_rows(idx));
    FusionModel::Gradients g = model.backward(out.cache, {{}, {}, gf.select_rows(idx), gl.select_rows(idx)});
    std::size_t k = 0;
    for (auto block : g.blocks())
      for (double x : block) {
        if (summed.size() <= k) summed.push_back(0.0);
        summed[k++] += x;
      }
  }
  std::size_t k = 0;
  for (auto block : whole.blocks())
    for (double x : block) EXPECT_NEAR(x, summed[k++], 1e-12);
}

class ModelGradients : public ::testing::TestWithParam<int> {};

TEST_P(ModelGradients, CompositeLossMatchesFiniteDifferences) {
  Rng rng(static_cast<std::uint64_t>(GetParam()));
  FusionModel model(small_dims(), rng);
  testing::CompositeProblem p = testing::make_problem(4, 8, 8, 4, rng);
  const testing::GradCheckSummary s = testing::check_model_gradients(model, p, 20, rng);
  EXPECT_EQ(s.failed, 0u) << "worst relative error " << s.worst;
  EXPECT_EQ(s.checked, 60u);
}

TEST_P(ModelGradients, DeepEncodersToo) {
  Rng rng(static_cast<std::uint64_t>(GetParam()) + 40);
  FusionDims d = small_dims();
  d.encoder_layers = 2;
  d.audio_dim = 6;
  d.video_dim = 5;
  FusionModel model(d, rng);
  testing::CompositeProblem p = testing::make_problem(5, 6, 5, 4, rng);
  const testing::GradCheckSummary s = testing::check_model_gradients(model, p, 20, rng);
  EXPECT_EQ(s.failed, 0u) << "worst relative error " << s.worst;
}

INSTANTIATE_TEST_SUITE_P(Seeds, ModelGradients, ::testing::Range(1, 6));

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> w{1.0, -2.0}, g{0.0, 0.0};
  std::vector<std::span<double>> params{w}, grads{g};
  AdamState st;
  adam_step(params, grads, st);
  EXPECT_EQ(w, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  std::vector<double> w{0.0, 0.0, 0.0}, g{3.0, -0.5, 1e-3};
  std::vector<std::span<double>> params{w}, grads{g};
  AdamState st;
  st.options.lr = 0.01;
  adam_step(params, grads, st);
  for (std::size_t i = 0; i < 3; ++i) {
    const double expect = -0.01 * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(w[i], expect, 1e-12);
  }
}

TEST(Adam, RepeatedGradientDoesNotGrowStep) {
  std::vector<double> w{0.0}, g{0.7};
  std::vector<std::span<double>> params{w}, grads{g};
  AdamState st;
  adam_step(params, grads, st);
  const double first = std::abs(w[0]);
  const double before = w[0];
  adam_step(params, grads, st);
  EXPECT_LE(std::abs(w[0] - before), first * (1.0 + 1e-9));
}

TEST(Adam, ShapeMismatch) {
  std::vector<double> w{0.0, 1.0}, g{1.0, 1.0}, g3{1.0, 1.0, 1.0};
  std::vector<std::span<double>> params{w}, grads{g}, bad{g3};
  AdamState st;
  adam_step(params, grads, st);
  try {
    adam_step(params, bad, st);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
}

TEST(Training, SeparableProblemReachesLowLoss) {
  Rng rng(9);
  FusionDims d = small_dims();
  d.num_classes = 2;
  FusionModel model(d, rng);
  Matrix a(64, 8), v(64, 8);
  std::vector<int> labels(64);
  for (std::size_t i = 0; i < 64; ++i) {
    labels[i] = static_cast<int>(i % 2);
    const double s = labels[i] == 0 ? -2.0 : 2.0;
    for (std::size_t j = 0; j < 8; ++j) {
      a(i, j) = s + 0.3 * rng.normal();
      v(i, j) = s + 0.3 * rng.normal();
    }
  }
  AdamState adam;
  adam.options.lr = 1e-2;
  double loss = 0.0;
  for (int step = 0; step < 200; ++step) {
    const auto out = model.forward(a, v);
    const LossValue ce = cross_entropy(out.logits, labels);
    loss = ce.value;
    FusionModel::Gradients g = model.backward(out.cache, {{}, {}, {}, ce.gradients[0]});
    adam_step(model.parameter_blocks(), g.blocks(), adam);
    model.bump_version();
  }
  EXPECT_LT(loss, 0.1);
}

TEST(Training, SeedDeterminism) {
  const auto trajectory = [] {
    Rng rng(10);
    FusionModel model(small_dims(), rng);
    testing::CompositeProblem p = testing::make_problem(4, 8, 8, 4, rng);
    AdamState adam;
    adam.options.lr = 1e-2;
    for (int step = 0; step < 10; ++step) {
      const auto r = testing::composite_loss(model, p);
      FusionModel::Gradients g = model.backward(r.cache, r.upstream);
      adam_step(model.parameter_blocks(), g.blocks(), adam);
      model.bump_version();
    }
    return model;
  };
  const FusionModel a = trajectory(), b = trajectory();
  EXPECT_TRUE(a.same_parameters(b));
}

TEST(ResetClassifier, ChangesOnlyOutputLayer) {
  Rng rng(11);
  FusionModel model(small_dims(), rng);
  const Mlp audio = model.audio_encoder();
  model.reset_classifier(7, rng);
  EXPECT_EQ(model.num_classes(), 7u);
  EXPECT_EQ(model.audio_encoder().layers()[0].weight, audio.layers()[0].weight);
  EXPECT_EQ(model.fused_dim(), 8u);
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(12);
  FusionDims d = small_dims();
  d.encoder_layers = 2;
  const FusionModel model(d, rng);
  const auto dir = testing::scratch_dir("checkpoint");
  save_checkpoint(model, dir / "m.dicm");
  const FusionModel back = load_checkpoint(dir / "m.dicm");
  EXPECT_TRUE(back.same_parameters(model));
  EXPECT_EQ(back.fusion_head().sizes(), model.fusion_head().sizes());
  EXPECT_EQ(back.audio_encoder().sizes(), model.audio_encoder().sizes());
}

TEST(Checkpoint, CorruptFilesRejected) {
  Rng rng(13);
  const FusionModel model(small_dims(), rng);
  const auto dir = testing::scratch_dir("checkpoint_bad");
  save_checkpoint(model, dir / "m.dicm");
  std::string bytes;
  {
    std::ifstream in(dir / "m.dicm", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto write = [&](const std::string& name, const std::string& b) {
    std::ofstream(dir / name, std::ios::binary) << b;
    return dir / name;
  };
  const auto code_of = [](const std::filesystem::path& p) {
    try {
      load_checkpoint(p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(code_of(write("magic.dicm", magic)), ErrorCode::kBadMagic);
  std::string version = bytes;
  version[4] = 9;
  EXPECT_EQ(code_of(write("version.dicm", version)), ErrorCode::kVersion);
  EXPECT_EQ(code_of(write("short.dicm", bytes.substr(0, bytes.size() - 3))), ErrorCode::kTruncated);
  EXPECT_EQ(code_of(write("extra.dicm", bytes + "x")), ErrorCode::kFormat);
}

}  // namespace
}  // namespace diccae
