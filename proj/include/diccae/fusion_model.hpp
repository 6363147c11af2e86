#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "diccae/matrix.hpp"
#include "diccae/mlp.hpp"
#include "diccae/rng.hpp"

namespace diccae {

struct FusionDims {
  std::size_t audio_dim = 0;
  std::size_t video_dim = 0;
  std::size_t embedding_dim = 32;
  std::size_t encoder_hidden = 64;
  std::size_t encoder_layers = 2;  // hidden layers per modality encoder
  std::size_t fusion_hidden = 64;
  std::size_t num_classes = 2;
};

// Two modality encoders and a fusion head over their concatenated outputs.
// The fusion head is [2h -> fusion_hidden -> classes]; its hidden activation
// (post-ReLU) is the fused class-level feature.
class FusionModel {
 public:
  struct Cache {
    Mlp::Cache audio;
    Mlp::Cache video;
    Mlp::Cache head;
    std::uint64_t model_version = 0;
    const FusionModel* owner = nullptr;
  };

  struct Output {
    Matrix audio_emb;
    Matrix video_emb;
    Matrix fused;
    Matrix logits;
    Cache cache;
  };

  // Upstream gradients; empty matrices are treated as zero.
  struct OutputGradients {
    Matrix audio_emb;
    Matrix video_emb;
    Matrix fused;
    Matrix logits;
  };

  struct Gradients {
    MlpGradients audio;
    MlpGradients video;
    MlpGradients head;
    Matrix audio_input;
    Matrix video_input;

    std::vector<std::span<double>> blocks();
  };

  FusionModel() = default;
  FusionModel(const FusionDims& dims, Rng& rng);
  FusionModel(Mlp audio, Mlp video, Mlp head);

  std::size_t embedding_dim() const { return audio_.output_dim(); }
  std::size_t fused_dim() const { return head_.sizes()[1]; }
  std::size_t num_classes() const { return head_.output_dim(); }
  std::size_t audio_dim() const { return audio_.input_dim(); }
  std::size_t video_dim() const { return video_.input_dim(); }
  std::size_t parameter_count() const;

  const Mlp& audio_encoder() const { return audio_; }
  const Mlp& video_encoder() const { return video_; }
  const Mlp& fusion_head() const { return head_; }
  Mlp& audio_encoder() { return audio_; }
  Mlp& video_encoder() { return video_; }
  Mlp& fusion_head() { return head_; }

  Output forward(const Matrix& audio, const Matrix& video) const;
  // Fused features only, in batches; no cache is kept.
  Matrix fused_features(const Matrix& audio, const Matrix& video) const;

  // Throws kCache if `cache` came from another model or from before the last
  // parameter update.
  Gradients backward(const Cache& cache, const OutputGradients& upstream) const;

  // Parameter blocks in declaration order (audio, video, head; per layer W then b).
  std::vector<std::span<double>> parameter_blocks();

  // Marks parameters as changed so older caches are rejected.
  void bump_version() { ++version_; }
  std::uint64_t version() const { return version_; }

  // Replaces the classification layer with a freshly initialized one.
  void reset_classifier(std::size_t num_classes, Rng& rng);

  bool same_parameters(const FusionModel& other) const;

 private:
  Mlp audio_;
  Mlp video_;
  Mlp head_;
  std::uint64_t version_ = 0;
};

// DICM checkpoint, little-endian:
//   "DICM"  u32 version(=1)  u32 mlp_count(=3)
//   per mlp: u32 size_count, u64 sizes[size_count]
//   u64 parameter_count  f64 parameters[parameter_count] (declaration order)
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const FusionModel& model, const std::filesystem::path& path);
FusionModel load_checkpoint(const std::filesystem::path& path);

}  // namespace diccae
