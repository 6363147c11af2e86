#include "diccae/fusion_model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "diccae/errors.hpp"

namespace diccae {
namespace {

Mlp make_encoder(std::size_t in, std::size_t hidden, std::size_t layers, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  for (std::size_t l = 0; l < layers; ++l) sizes.push_back(hidden);
  sizes.push_back(out);
  return Mlp(std::move(sizes));
}

Matrix zeros_if_empty(const Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.empty()) return Matrix(rows, cols);
  if (m.rows() != rows || m.cols() != cols)
    throw Error(ErrorCode::kShape, "upstream gradient has the wrong shape");
  return m;
}

}  // namespace

FusionModel::FusionModel(const FusionDims& dims, Rng& rng)
    : audio_(make_encoder(dims.audio_dim, dims.encoder_hidden, dims.encoder_layers, dims.embedding_dim)),
      video_(make_encoder(dims.video_dim, dims.encoder_hidden, dims.encoder_layers, dims.embedding_dim)),
      head_(Mlp({2 * dims.embedding_dim, dims.fusion_hidden, dims.num_classes})) {
  audio_.init_glorot(rng);
  video_.init_glorot(rng);
  head_.init_glorot(rng);
}

FusionModel::FusionModel(Mlp audio, Mlp video, Mlp head)
    : audio_(std::move(audio)), video_(std::move(video)), head_(std::move(head)) {
  if (audio_.output_dim() != video_.output_dim())
    throw Error(ErrorCode::kShape, "modality encoders must share an embedding width");
  if (head_.input_dim() != 2 * audio_.output_dim())
    throw Error(ErrorCode::kShape, "fusion head input must be twice the embedding width");
  if (head_.sizes().size() != 3)
    throw Error(ErrorCode::kShape, "fusion head must have exactly one hidden layer");
}

std::size_t FusionModel::parameter_count() const {
  return audio_.parameter_count() + video_.parameter_count() + head_.parameter_count();
}

FusionModel::Output FusionModel::forward(const Matrix& audio, const Matrix& video) const {
  if (audio.rows() != video.rows())
    throw Error(ErrorCode::kDimension, "audio and video batches differ in size");
  Output out;
  out.audio_emb = audio_.forward(audio, &out.cache.audio);
  out.video_emb = video_.forward(video, &out.cache.video);
  out.logits = head_.forward(hconcat(out.audio_emb, out.video_emb), &out.cache.head);
  out.fused = out.cache.head.activations[1];
  out.cache.model_version = version_;
  out.cache.owner = this;
  return out;
}

Matrix FusionModel::fused_features(const Matrix& audio, const Matrix& video) const {
  if (audio.rows() != video.rows())
    throw Error(ErrorCode::kDimension, "audio and video batches differ in size");
  Mlp::Cache cache;
  head_.forward(hconcat(audio_.forward(audio), video_.forward(video)), &cache);
  return cache.activations[1];
}

FusionModel::Gradients FusionModel::backward(const Cache& cache, const OutputGradients& upstream) const {
  if (cache.owner != this || cache.model_version != version_)
    throw Error(ErrorCode::kCache, "activation cache is stale or belongs to another model");
  const std::size_t batch = cache.head.activations.front().rows();
  const std::size_t h = embedding_dim();
  Gradients g;
  const Matrix d_logits = zeros_if_empty(upstream.logits, batch, num_classes());
  const Matrix d_fused = zeros_if_empty(upstream.fused, batch, fused_dim());
  const Matrix d_concat = head_.backward(cache.head, d_logits, g.head, &d_fused, 0);

  Matrix d_audio = zeros_if_empty(upstream.audio_emb, batch, h);
  Matrix d_video = zeros_if_empty(upstream.video_emb, batch, h);
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t j = 0; j < h; ++j) {
      d_audio(r, j) += d_concat(r, j);
      d_video(r, j) += d_concat(r, h + j);
    }
  g.audio_input = audio_.backward(cache.audio, d_audio, g.audio);
  g.video_input = video_.backward(cache.video, d_video, g.video);
  return g;
}

std::vector<std::span<double>> FusionModel::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  audio_.append_parameter_blocks(blocks);
  video_.append_parameter_blocks(blocks);
  head_.append_parameter_blocks(blocks);
  return blocks;
}

std::vector<std::span<double>> FusionModel::Gradients::blocks() {
  std::vector<std::span<double>> out;
  append_gradient_blocks(audio, out);
  append_gradient_blocks(video, out);
  append_gradient_blocks(head, out);
  return out;
}

void FusionModel::reset_classifier(std::size_t num_classes, Rng& rng) {
  if (num_classes == 0) throw Error(ErrorCode::kConfig, "classifier needs at least one class");
  head_.reset_last_layer(num_classes, rng);
  bump_version();
}

bool FusionModel::same_parameters(const FusionModel& other) const {
  auto same = [](const Mlp& a, const Mlp& b) {
    if (a.sizes() != b.sizes()) return false;
    for (std::size_t l = 0; l < a.layers().size(); ++l)
      if (a.layers()[l].weight != b.layers()[l].weight || a.layers()[l].bias != b.layers()[l].bias)
        return false;
    return true;
  };
  return same(audio_, other.audio_) && same(video_, other.video_) && same(head_, other.head_);
}

namespace {

constexpr char kCheckpointMagic[4] = {'D', 'I', 'C', 'M'};

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  template <typename T>
  T get() {
    if (bytes_.size() - pos_ < sizeof(T)) throw Error(ErrorCode::kTruncated, name_ + ": truncated checkpoint");
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;)
      u = static_cast<decltype(u)>((u << 8) | static_cast<unsigned char>(bytes_[pos_ + i]));
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const FusionModel& model, const std::filesystem::path& path) {
  std::string buf(kCheckpointMagic, 4);
  put_le<std::uint32_t>(buf, kCheckpointVersion);
  const Mlp* mlps[] = {&model.audio_encoder(), &model.video_encoder(), &model.fusion_head()};
  put_le<std::uint32_t>(buf, 3);
  for (const Mlp* m : mlps) {
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(m->sizes().size()));
    for (std::size_t s : m->sizes()) put_le<std::uint64_t>(buf, s);
  }
  put_le<std::uint64_t>(buf, model.parameter_count());
  for (const Mlp* m : mlps)
    for (const auto& layer : m->layers()) {
      for (double w : layer.weight.values()) put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(w));
      for (double b : layer.bias) put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(b));
    }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

FusionModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < 4) throw Error(ErrorCode::kTruncated, path.string() + ": truncated checkpoint");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw Error(ErrorCode::kBadMagic, path.string() + ": not a DICM checkpoint");
  Reader r(bytes, path.string());
  r.get<std::uint32_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::kVersion, path.string() + ": checkpoint version " + std::to_string(version));
  if (r.get<std::uint32_t>() != 3) throw Error(ErrorCode::kFormat, path.string() + ": expected 3 MLPs");
  std::vector<Mlp> mlps;
  for (int i = 0; i < 3; ++i) {
    const auto count = r.get<std::uint32_t>();
    if (count < 2 || count > 64) throw Error(ErrorCode::kFormat, path.string() + ": bad layer table");
    std::vector<std::size_t> sizes(count);
    for (auto& s : sizes) {
      s = static_cast<std::size_t>(r.get<std::uint64_t>());
      // Every layer width is bounded by the parameters stored after it.
      if (s == 0 || s > bytes.size() / 8) throw Error(ErrorCode::kTruncated, path.string() + ": truncated checkpoint");
    }
    mlps.emplace_back(std::move(sizes));
  }
  const auto params = r.get<std::uint64_t>();
  std::size_t expected = 0;
  for (const auto& m : mlps) expected += m.parameter_count();
  if (params != expected) throw Error(ErrorCode::kFormat, path.string() + ": parameter count mismatch");
  for (auto& m : mlps)
    for (auto& layer : m.layers()) {
      for (double& w : layer.weight.values()) w = std::bit_cast<double>(r.get<std::uint64_t>());
      for (double& b : layer.bias) b = std::bit_cast<double>(r.get<std::uint64_t>());
    }
  if (!r.at_end()) throw Error(ErrorCode::kFormat, path.string() + ": trailing bytes in checkpoint");
  return FusionModel(std::move(mlps[0]), std::move(mlps[1]), std::move(mlps[2]));
}

}  // namespace diccae
