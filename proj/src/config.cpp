#include "diccae/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

#include "diccae/errors.hpp"

namespace diccae {
namespace {

struct Field {
  std::string_view key;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kConfig, "config key '" + std::string(key) + "': cannot parse value '" +
                                      std::string(value) + "'");
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    bad_value(key, text);
  } else {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, text);
    return v;
  }
}

template <typename T>
std::string show(T v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<T>) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  } else {
    return std::to_string(v);
  }
}

template <typename Access>
Field field(std::string_view key, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<TrainConfig&>()))>;
  return Field{
      key,
      [key, access](TrainConfig& c, std::string_view text) { access(c) = parse_value<T>(key, text); },
      [access](const TrainConfig& c) { return show(access(const_cast<TrainConfig&>(c))); }};
}

#define DICCAE_FIELD(name, expr) field(name, [](TrainConfig& c) -> auto& { return c.expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      DICCAE_FIELD("seed", seed),
      DICCAE_FIELD("selfsup_epochs", selfsup_epochs),
      DICCAE_FIELD("sup_epochs", sup_epochs),
      DICCAE_FIELD("batch_size", batch_size),
      DICCAE_FIELD("pair_batch_size", pair_batch_size),
      DICCAE_FIELD("positive_fraction", positive_fraction),
      DICCAE_FIELD("kmeans_k", kmeans_k),
      DICCAE_FIELD("kmeans_restarts", kmeans_restarts),
      DICCAE_FIELD("kmeans_max_iters", kmeans_max_iters),
      DICCAE_FIELD("refine_period", refine_period),
      DICCAE_FIELD("update_fraction", update_fraction),
      DICCAE_FIELD("eval_fraction", eval_fraction),
      DICCAE_FIELD("coef_classification", coefficients.classification),
      DICCAE_FIELD("coef_infonce", coefficients.info_nce),
      DICCAE_FIELD("coef_diccae", coefficients.diccae),
      DICCAE_FIELD("no_confusion_loss", ablations.no_confusion_loss),
      DICCAE_FIELD("no_dynamic_weighting", ablations.no_dynamic_weighting),
      DICCAE_FIELD("no_infonce", ablations.no_infonce),
      DICCAE_FIELD("no_refinement", ablations.no_refinement),
      DICCAE_FIELD("no_cluster_guidance", ablations.no_cluster_guidance),
      DICCAE_FIELD("confusion_temperature", confusion_temperature),
      DICCAE_FIELD("infonce_temperature", infonce_temperature),
      DICCAE_FIELD("lr", lr),
      DICCAE_FIELD("lr_decay", lr_decay),
      DICCAE_FIELD("embedding_dim", embedding_dim),
      DICCAE_FIELD("encoder_hidden", encoder_hidden),
      DICCAE_FIELD("encoder_layers", encoder_layers),
      DICCAE_FIELD("fusion_hidden", fusion_hidden),
      DICCAE_FIELD("coverage", coverage),
      DICCAE_FIELD("hist_bins", hist_bins),
  };
  return all;
}

#undef DICCAE_FIELD

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void require(bool ok, std::string_view key, std::string_view rule) {
  if (!ok) throw Error(ErrorCode::kConfig, "config key '" + std::string(key) + "' " + std::string(rule));
}

}  // namespace

void TrainConfig::validate() const {
  require(batch_size >= 2, "batch_size", "must be >= 2");
  require(pair_batch_size >= 1, "pair_batch_size", "must be >= 1");
  require(positive_fraction >= 0.0 && positive_fraction <= 1.0, "positive_fraction", "must be in [0, 1]");
  require(kmeans_k >= 1, "kmeans_k", "must be >= 1");
  require(kmeans_restarts >= 1, "kmeans_restarts", "must be >= 1");
  require(kmeans_max_iters >= 1, "kmeans_max_iters", "must be >= 1");
  require(refine_period >= 1, "refine_period", "must be >= 1");
  require(update_fraction > 0.0 && update_fraction < 1.0, "update_fraction", "must be in (0, 1)");
  require(eval_fraction > 0.0 && eval_fraction < 1.0, "eval_fraction", "must be in (0, 1)");
  require(update_fraction + eval_fraction < 1.0, "eval_fraction", "plus update_fraction must be < 1");
  auto coef_ok = [](double c) { return std::isfinite(c) && c >= 0.0; };
  require(coef_ok(coefficients.classification), "coef_classification", "must be finite and >= 0");
  require(coef_ok(coefficients.info_nce), "coef_infonce", "must be finite and >= 0");
  require(coef_ok(coefficients.diccae), "coef_diccae", "must be finite and >= 0");
  require(confusion_temperature > 0.0, "confusion_temperature", "must be > 0");
  require(infonce_temperature > 0.0, "infonce_temperature", "must be > 0");
  require(lr > 0.0 && std::isfinite(lr), "lr", "must be > 0");
  require(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay", "must be in (0, 1]");
  require(embedding_dim >= 1, "embedding_dim", "must be >= 1");
  require(encoder_hidden >= 1, "encoder_hidden", "must be >= 1");
  require(fusion_hidden >= 1, "fusion_hidden", "must be >= 1");
  require(coverage > 0.0 && coverage <= 1.0, "coverage", "must be in (0, 1]");
  require(hist_bins >= 1, "hist_bins", "must be >= 1");
}

TrainConfig parse_config(std::istream& in) {
  TrainConfig config;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::kConfig, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string_view key = trim(view.substr(0, eq));
    const std::string_view value = trim(view.substr(eq + 1));
    const auto& all = fields();
    const auto it = std::find_if(all.begin(), all.end(), [&](const Field& f) { return f.key == key; });
    if (it == all.end()) throw Error(ErrorCode::kConfig, "config key '" + std::string(key) + "': unknown key");
    if (!seen.insert(std::string(key)).second)
      throw Error(ErrorCode::kConfig, "config key '" + std::string(key) + "': given twice");
    it->set(config, value);
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  return parse_config(in);
}

std::string format_config(const TrainConfig& config) {
  std::ostringstream out;
  for (const auto& f : fields()) out << f.key << " = " << f.get(config) << '\n';
  return out.str();
}

}  // namespace diccae
