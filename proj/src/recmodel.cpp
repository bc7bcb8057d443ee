// Copyright 2026 The lamar Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lamar/recmodel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "lamar/errors.hpp"
#include "lamar/io.hpp"
#include "lamar/random.hpp"
#include "lamar/text.hpp"

namespace lamar::recmodel {
namespace {

constexpr char kMagic[8] = {'L', 'A', 'M', 'A', 'R', 'M', 'D', 'L'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian byte writer/reader for the checkpoint format.
class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    out_.append(static_cast<const char*>(p), n);
  }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw IoError("checkpoint is truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

// Item encoding with the intermediates the backward pass needs.
struct Encoded {
  std::vector<double> mean;  // pre-normalization
  double length = 0.0;
  std::vector<double> unit;  // zero when length == 0
};

Encoded encode_detailed(const ItemFeatures& f, const Model& model) {
  const std::size_t d = model.config().embed_dim;
  Encoded e;
  e.mean.assign(d, 0.0);
  e.unit.assign(d, 0.0);
  if (f.buckets.empty()) return e;
  for (std::uint32_t b : f.buckets) {
    const auto r = model.row(b);
    for (std::size_t k = 0; k < d; ++k) e.mean[k] += r[k];
  }
  const double inv = 1.0 / static_cast<double>(f.buckets.size());
  for (double& v : e.mean) v *= inv;
  e.length = kernels::norm(e.mean);
  if (e.length > 0.0) {
    for (std::size_t k = 0; k < d; ++k) e.unit[k] = e.mean[k] / e.length;
  }
  return e;
}

// d(loss)/d(mean) from d(loss)/d(unit) through y = x / |x|.
std::vector<double> backprop_normalize(const std::vector<double>& grad_unit,
                                       const std::vector<double>& unit, double length) {
  std::vector<double> g(unit.size(), 0.0);
  if (length == 0.0) return g;
  const double proj = kernels::dot(grad_unit, unit);
  for (std::size_t k = 0; k < unit.size(); ++k) g[k] = (grad_unit[k] - proj * unit[k]) / length;
  return g;
}

// Spreads d(loss)/d(mean) over the item's bucket rows.
void scatter(const ItemFeatures& f, const std::vector<double>& grad_mean, SparseGrad& grad) {
  if (f.buckets.empty()) return;
  const double inv = 1.0 / static_cast<double>(f.buckets.size());
  for (std::uint32_t b : f.buckets) {
    auto& g = grad[b];
    if (g.empty()) g.assign(grad_mean.size(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += grad_mean[k] * inv;
  }
}

std::vector<double> history_weights(std::size_t n, double decay) {
  std::vector<double> w(n);
  double p = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    w[n - 1 - j] = p;  // most recent (last) gets decay^0
    p *= decay;
  }
  return w;
}

}  // namespace

void ModelConfig::validate() const {
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (hash_buckets == 0) throw ConfigError("hash_buckets must be positive");
  if (history_len == 0) throw ConfigError("history_len must be positive");
  if (negatives_per_step == 0) throw ConfigError("negatives_per_step must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(recency_decay > 0.0 && recency_decay <= 1.0)) {
    throw ConfigError("recency_decay must lie in (0, 1]");
  }
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) {
    throw ConfigError("init_scale must be positive");
  }
  if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) {
    throw ConfigError("logit_scale must be positive");
  }
}

Model Model::initialize(const ModelConfig& config) {
  config.validate();
  Model m;
  m.config_ = config;
  const std::size_t d = config.embed_dim;
  m.params_.assign(static_cast<std::size_t>(config.hash_buckets) * d, 0.0f);
  const std::uint64_t base = splitmix64(config.seed ^ 0x6c616d6172ULL);
  const auto rows = static_cast<long long>(config.hash_buckets);
  // Counter-based draws: entry k depends only on (seed, k), so the result is
  // identical for any thread count.
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const std::uint64_t k = static_cast<std::uint64_t>(r) * d + c;
      const std::uint64_t a = splitmix64(base + 2 * k);
      const std::uint64_t b = splitmix64(base + 2 * k + 1);
      const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
      const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
      m.params_[static_cast<std::size_t>(k)] = static_cast<float>(z * config.init_scale);
    }
  }
  return m;
}

bool Model::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](float v) { return std::isfinite(v); });
}

std::string Model::serialize() const {
  ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(config_.embed_dim);
  w.u32(config_.hash_buckets);
  w.u32(config_.history_len);
  w.u32(config_.negatives_per_step);
  w.f64(config_.learning_rate);
  w.u32(config_.epochs);
  w.u64(config_.seed);
  w.f64(config_.recency_decay);
  w.u8(config_.full_softmax ? 1 : 0);
  w.f64(config_.init_scale);
  w.f64(config_.logit_scale);
  w.u64(params_.size());
  for (float v : params_) w.f32(v);
  return w.take();
}

Model Model::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError("not a model checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  Model m;
  auto& c = m.config_;
  c.embed_dim = r.u32();
  c.hash_buckets = r.u32();
  c.history_len = r.u32();
  c.negatives_per_step = r.u32();
  c.learning_rate = r.f64();
  c.epochs = r.u32();
  c.seed = r.u64();
  c.recency_decay = r.f64();
  c.full_softmax = r.u8() != 0;
  c.init_scale = r.f64();
  c.logit_scale = r.f64();
  c.validate();
  const std::uint64_t n = r.u64();
  if (n != static_cast<std::uint64_t>(c.hash_buckets) * c.embed_dim) {
    throw IoError("checkpoint parameter count does not match its config");
  }
  m.params_.resize(static_cast<std::size_t>(n));
  for (auto& v : m.params_) v = r.f32();
  if (!r.done()) throw IoError("trailing bytes after checkpoint body");
  return m;
}

void Model::save(const std::filesystem::path& path) const {
  io::write_file_atomic(path, serialize());
}

Model Model::load(const std::filesystem::path& path) { return deserialize(io::read_file(path)); }

std::uint32_t token_bucket(std::string_view key, std::string_view normalized_token,
                           std::uint32_t hash_buckets) {
  std::uint64_t h = text::fnv1a64(key);
  h = text::fnv1a64("\x1f", h);
  h = text::fnv1a64(normalized_token, h);
  return static_cast<std::uint32_t>(splitmix64(h) % hash_buckets);
}

ItemFeatures featurize(const enrichment::AttributeText& t, std::uint32_t hash_buckets) {
  ItemFeatures f;
  for (const auto& pair : t.pairs) {
    for (auto word : text::split_words(pair.value)) {
      const std::string tok = text::normalize_token(word);
      if (tok.empty()) continue;
      f.buckets.push_back(token_bucket(pair.name, tok, hash_buckets));
    }
  }
  // Sorting makes the summation order, and so the encoding, independent of
  // token order.
  std::sort(f.buckets.begin(), f.buckets.end());
  return f;
}

std::vector<double> encode_features(const ItemFeatures& features, const Model& model) {
  return encode_detailed(features, model).unit;
}

std::vector<double> encode_text(const enrichment::AttributeText& t, const Model& model) {
  return encode_features(featurize(t, model.config().hash_buckets), model);
}

std::vector<double> encode_history_features(const std::vector<const ItemFeatures*>& items,
                                            const Model& model) {
  const std::size_t d = model.config().embed_dim;
  std::vector<double> h(d, 0.0);
  const std::size_t n = std::min<std::size_t>(items.size(), model.config().history_len);
  const std::size_t begin = items.size() - n;
  const auto w = history_weights(n, model.config().recency_decay);
  for (std::size_t j = 0; j < n; ++j) {
    const auto u = encode_features(*items[begin + j], model);
    for (std::size_t k = 0; k < d; ++k) h[k] += w[j] * u[k];
  }
  kernels::normalize(h);
  return h;
}

std::vector<double> encode_history(const std::vector<enrichment::AttributeText>& items,
                                   const Model& model) {
  std::vector<ItemFeatures> feats;
  feats.reserve(items.size());
  for (const auto& t : items) feats.push_back(featurize(t, model.config().hash_buckets));
  std::vector<const ItemFeatures*> ptrs;
  for (const auto& f : feats) ptrs.push_back(&f);
  return encode_history_features(ptrs, model);
}

std::size_t RankedList::rank_of(const std::string& item_id) const {
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].item_id == item_id) return i + 1;
  return 0;
}

RankedList rank(const Model& model, const std::vector<enrichment::AttributeText>& history,
                const std::vector<std::pair<std::string, enrichment::AttributeText>>& candidates) {
  if (candidates.empty()) throw PreconditionError("rank needs at least one candidate");
  const auto h = encode_history(history, model);
  RankedList out;
  out.entries.reserve(candidates.size());
  for (const auto& [id, t] : candidates) {
    out.entries.push_back({id, kernels::dot(h, encode_text(t, model))});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item_id < b.item_id;
  });
  return out;
}

double example_loss(const Model& model, const Example& ex, SparseGrad* grad) {
  const std::size_t d = model.config().embed_dim;
  const double scale = model.config().logit_scale;
  if (ex.candidates.empty() || ex.target >= ex.candidates.size()) {
    throw PreconditionError("example target is out of range");
  }

  // Forward: history.
  const std::size_t n_hist = std::min<std::size_t>(ex.history.size(), model.config().history_len);
  const std::size_t h_begin = ex.history.size() - n_hist;
  const auto w = history_weights(n_hist, model.config().recency_decay);
  std::vector<Encoded> hist;
  hist.reserve(n_hist);
  std::vector<double> y(d, 0.0);
  for (std::size_t j = 0; j < n_hist; ++j) {
    hist.push_back(encode_detailed(*ex.history[h_begin + j], model));
    for (std::size_t k = 0; k < d; ++k) y[k] += w[j] * hist.back().unit[k];
  }
  const double y_len = kernels::norm(y);
  std::vector<double> h(d, 0.0);
  if (y_len > 0.0)
    for (std::size_t k = 0; k < d; ++k) h[k] = y[k] / y_len;

  // Forward: candidates and log-softmax.
  std::vector<Encoded> cands;
  cands.reserve(ex.candidates.size());
  std::vector<double> logits(ex.candidates.size());
  for (std::size_t i = 0; i < ex.candidates.size(); ++i) {
    cands.push_back(encode_detailed(*ex.candidates[i], model));
    logits[i] = scale * kernels::dot(h, cands.back().unit);
  }
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_logit);
    z += p[i];
  }
  const double loss = -(logits[ex.target] - max_logit - std::log(z));
  if (grad == nullptr) return loss;

  // Backward.
  std::vector<double> grad_h(d, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gs = p[i] / z - (i == ex.target ? 1.0 : 0.0);
    for (std::size_t k = 0; k < d; ++k) grad_h[k] += scale * gs * cands[i].unit[k];
    std::vector<double> grad_c(d);
    for (std::size_t k = 0; k < d; ++k) grad_c[k] = scale * gs * h[k];
    scatter(*ex.candidates[i], backprop_normalize(grad_c, cands[i].unit, cands[i].length), *grad);
  }
  const auto grad_y = backprop_normalize(grad_h, h, y_len);
  for (std::size_t j = 0; j < n_hist; ++j) {
    std::vector<double> grad_u(d);
    for (std::size_t k = 0; k < d; ++k) grad_u[k] = w[j] * grad_y[k];
    scatter(*ex.history[h_begin + j], backprop_normalize(grad_u, hist[j].unit, hist[j].length),
            *grad);
  }
  return loss;
}

TrainResult train(const corpus::DatasetSplit& split, const enrichment::ItemTexts& texts,
                  const ModelConfig& config) {
  return train(Model::initialize(config), split, texts);
}

TrainResult train(Model model, const corpus::DatasetSplit& split,
                  const enrichment::ItemTexts& texts) {
  const ModelConfig cfg = model.config();
  TrainResult result{std::move(model), {}, 0};
  if (cfg.epochs == 0) return result;

  std::vector<ItemFeatures> features;
  std::unordered_map<std::string, std::size_t> index;
  features.reserve(texts.size());
  for (const auto& [id, t] : texts) {
    index.emplace(id, features.size());
    features.push_back(featurize(t, cfg.hash_buckets));
  }
  const std::size_t n_items = features.size();
  if (cfg.full_softmax && n_items > kMaxFullSoftmaxItems) {
    throw ConfigError("full_softmax is limited to catalogs of " +
                      std::to_string(kMaxFullSoftmaxItems) + " items");
  }

  // (history window, target) pairs over every training prefix.
  struct Step {
    std::vector<std::size_t> history;
    std::size_t target;
  };
  std::vector<Step> steps;
  for (const auto& user : split.users) {
    std::vector<std::size_t> seq;
    seq.reserve(user.train.size());
    for (const auto& id : user.train) {
      auto it = index.find(id);
      if (it == index.end()) throw PreconditionError("training item '" + id + "' has no text");
      seq.push_back(it->second);
    }
    for (std::size_t j = 1; j < seq.size(); ++j) {
      const std::size_t begin = j > cfg.history_len ? j - cfg.history_len : 0;
      steps.push_back({{seq.begin() + static_cast<long>(begin), seq.begin() + static_cast<long>(j)},
                       seq[j]});
    }
  }
  if (steps.empty()) throw PreconditionError("training split has no (prefix, next item) pairs");

  Rng rng = Rng::derive(cfg.seed, 0x747261696eULL);
  std::vector<std::size_t> order(steps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const float lr = static_cast<float>(cfg.learning_rate);
  std::unordered_set<std::size_t> picked;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<double> losses;
    losses.reserve(order.size());
    for (std::size_t s : order) {
      const Step& step = steps[s];
      Example ex;
      for (std::size_t i : step.history) ex.history.push_back(&features[i]);
      ex.candidates.push_back(&features[step.target]);
      ex.target = 0;
      if (cfg.full_softmax || n_items - 1 <= cfg.negatives_per_step) {
        for (std::size_t i = 0; i < n_items; ++i)
          if (i != step.target) ex.candidates.push_back(&features[i]);
      } else {
        picked.clear();
        while (picked.size() < cfg.negatives_per_step) {
          const auto i = static_cast<std::size_t>(rng.uniform_index(n_items));
          if (i == step.target || !picked.insert(i).second) continue;
          ex.candidates.push_back(&features[i]);
        }
      }
      SparseGrad grad;
      const double loss = example_loss(result.model, ex, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingDivergenceError("non-finite loss at step " + std::to_string(result.steps),
                                      static_cast<long long>(result.steps));
      }
      for (const auto& [bucket, g] : grad) {
        auto r = result.model.row(bucket);
        for (std::size_t k = 0; k < g.size(); ++k) r[k] -= lr * static_cast<float>(g[k]);
      }
      losses.push_back(loss);
      ++result.steps;
    }
    result.epoch_losses.push_back(kernels::pairwise_sum(losses) /
                                  static_cast<double>(losses.size()));
  }
  if (!result.model.all_finite()) {
    throw TrainingDivergenceError("parameters became non-finite",
                                  static_cast<long long>(result.steps));
  }
  return result;
}

namespace serial {

kernels::Matrix encode_all(const Model& model, const std::vector<ItemFeatures>& items) {
  kernels::Matrix m(items.size(), model.config().embed_dim);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto e = encode_features(items[i], model);
    std::copy(e.begin(), e.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace serial

namespace parallel {

kernels::Matrix encode_all(const Model& model, const std::vector<ItemFeatures>& items) {
  kernels::Matrix m(items.size(), model.config().embed_dim);
  const auto n = static_cast<long long>(items.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long long i = 0; i < n; ++i) {
    const auto e = encode_features(items[static_cast<std::size_t>(i)], model);
    std::copy(e.begin(), e.end(), m.row(static_cast<std::size_t>(i)).begin());
  }
  return m;
}

}  // namespace parallel

}  // namespace lamar::recmodel
