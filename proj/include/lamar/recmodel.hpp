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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lamar/corpus.hpp"
#include "lamar/enrichment.hpp"
#include "lamar/kernels.hpp"

namespace lamar::recmodel {

struct ModelConfig {
  std::uint32_t embed_dim = 64;
  std::uint32_t hash_buckets = 1u << 18;
  std::uint32_t history_len = 10;
  std::uint32_t negatives_per_step = 50;
  double learning_rate = 0.05;
  std::uint32_t epochs = 5;
  std::uint64_t seed = 0;
  double recency_decay = 0.8;
  /// Softmax over the whole catalog instead of sampled negatives.
  /// Only allowed for catalogs of at most kMaxFullSoftmaxItems items.
  bool full_softmax = false;
  /// Standard deviation of the Gaussian initialisation.
  double init_scale = 0.1;
  /// Multiplier applied to cosine scores before the softmax.
  double logit_scale = 1.0;

  /// Throws ConfigError on any non-positive size or out-of-range real.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

inline constexpr std::size_t kMaxFullSoftmaxItems = 10000;

/// Hashed bag-of-tokens encoder: one embedding row per hash bucket.
class Model {
 public:
  /// Seeded Gaussian initialisation.
  static Model initialize(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::span<const float> row(std::uint32_t bucket) const {
    return {params_.data() + static_cast<std::size_t>(bucket) * config_.embed_dim,
            config_.embed_dim};
  }
  std::span<float> row(std::uint32_t bucket) {
    return {params_.data() + static_cast<std::size_t>(bucket) * config_.embed_dim,
            config_.embed_dim};
  }
  const std::vector<float>& parameters() const { return params_; }
  std::vector<float>& parameters() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  bool all_finite() const;

  /// Little-endian checkpoint: magic, version, config, then the matrix.
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);
  std::string serialize() const;
  static Model deserialize(std::string_view bytes);

  bool operator==(const Model&) const = default;

 private:
  ModelConfig config_;
  std::vector<float> params_;
};

/// Bucket ids of an item's tokens, sorted, repeats kept. Tokens are
/// normalized words salted with their attribute key.
struct ItemFeatures {
  std::vector<std::uint32_t> buckets;
};

ItemFeatures featurize(const enrichment::AttributeText& text, std::uint32_t hash_buckets);

std::uint32_t token_bucket(std::string_view key, std::string_view normalized_token,
                           std::uint32_t hash_buckets);

/// Mean of bucket rows, L2-normalized. Empty features give the zero vector.
std::vector<double> encode_features(const ItemFeatures& features, const Model& model);
std::vector<double> encode_text(const enrichment::AttributeText& text, const Model& model);

/// Recency-weighted mean of unit item encodings (chronological input, most
/// recent last, weight decay^j for the j-th most recent), L2-normalized.
/// Only the last history_len items are used.
std::vector<double> encode_history(const std::vector<enrichment::AttributeText>& items,
                                   const Model& model);
std::vector<double> encode_history_features(const std::vector<const ItemFeatures*>& items,
                                            const Model& model);

struct RankedEntry {
  std::string item_id;
  double score = 0.0;
};

struct RankedList {
  std::vector<RankedEntry> entries;  // score descending, item_id ascending on ties

  /// 1-based; 0 when absent.
  std::size_t rank_of(const std::string& item_id) const;
};

RankedList rank(const Model& model, const std::vector<enrichment::AttributeText>& history,
                const std::vector<std::pair<std::string, enrichment::AttributeText>>& candidates);

/// One sampled-softmax training instance.
struct Example {
  std::vector<const ItemFeatures*> history;  // chronological
  std::vector<const ItemFeatures*> candidates;
  std::size_t target = 0;  // index into candidates
};

/// Sparse gradient keyed by bucket, ordered for deterministic updates.
using SparseGrad = std::map<std::uint32_t, std::vector<double>>;

/// Cross-entropy of the target under a softmax of scaled cosine scores.
/// Accumulates d(loss)/d(row) into grad when non-null.
double example_loss(const Model& model, const Example& example, SparseGrad* grad);

struct TrainResult {
  Model model;
  std::vector<double> epoch_losses;  // mean loss per step, per epoch
  std::size_t steps = 0;
};

/// Plain SGD on the sampled-softmax next-item objective over every
/// (prefix, next item) pair of the training sequences. Deterministic for a
/// given seed. Throws TrainingDivergenceError on a non-finite loss.
TrainResult train(const corpus::DatasetSplit& split, const enrichment::ItemTexts& texts,
                  const ModelConfig& config);

/// Same training loop starting from an existing model.
TrainResult train(Model model, const corpus::DatasetSplit& split,
                  const enrichment::ItemTexts& texts);

/// Encodings of many items, one row each.
namespace serial {
kernels::Matrix encode_all(const Model& model, const std::vector<ItemFeatures>& items);
}
namespace parallel {
kernels::Matrix encode_all(const Model& model, const std::vector<ItemFeatures>& items);
}

}  // namespace lamar::recmodel
