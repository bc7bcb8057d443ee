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

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "lamar/http.hpp"
#include "lamar/kernels.hpp"

namespace lamar::diversity {

enum class EmbedderKind { kBuiltinHashedTfidf, kHttpEmbeddingService };

std::string to_string(EmbedderKind kind);
EmbedderKind embedder_kind_from_string(const std::string& s);

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kBuiltinHashedTfidf;
  std::size_t dim = std::size_t{1} << 18;  // builtin only; http takes the service's size
  std::string model_id = "builtin-hashed-tfidf";
  std::string endpoint;  // base URL; "/embeddings" is appended
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t batch_size = 64;
  int max_attempts = 5;
  int initial_backoff_ms = 500;

  bool operator==(const EmbedderConfig&) const = default;
};

/// One sparse, L2-normalized row per text (zero row for an empty text).
struct Embeddings {
  std::size_t dim = 0;
  std::vector<kernels::SparseRow> rows;
  std::size_t empty_texts = 0;

  std::size_t size() const { return rows.size(); }
  static Embeddings from_dense(const std::vector<std::vector<double>>& dense);
};

/// Hashed unigram term frequencies scaled by smoothed inverse document
/// frequency over the batch, then L2-normalized.
Embeddings embed_builtin(const std::vector<std::string>& texts, std::size_t dim);

/// POSTs {model, input} batches to an OpenAI-compatible embeddings endpoint.
Embeddings embed_http(const std::vector<std::string>& texts, const EmbedderConfig& config,
                      http::Transport& transport,
                      std::function<void(std::chrono::milliseconds)> sleep = {});

/// Dispatches on config.kind. Throws PreconditionError for an empty batch.
Embeddings embed(const std::vector<std::string>& texts, const EmbedderConfig& config,
                 std::shared_ptr<http::Transport> transport = nullptr);

/// Cosine of two rows of the same matrix; 0 when either row is zero.
double row_cosine(const Embeddings& e, std::size_t i, std::size_t j);

/// Full n x n cosine matrix (diagonal holds row_cosine(i, i)).
kernels::Matrix similarity_matrix(const Embeddings& e);

/// counts[t][i] = |{ j != i : cosine(i, j) >= thresholds[t] }|
namespace serial {
std::vector<std::vector<std::size_t>> neighbor_counts(const Embeddings& e,
                                                      const std::vector<double>& thresholds);
}
namespace parallel {
std::vector<std::vector<std::size_t>> neighbor_counts(const Embeddings& e,
                                                      const std::vector<double>& thresholds);
}

struct SimilarityReport {
  std::vector<double> thresholds;
  std::vector<std::size_t> highly_similar;  // per threshold
  std::size_t n_texts = 0;
  double fraction = 0.1;
  bool strict = true;
  std::vector<std::vector<bool>> flags;  // per threshold, per text

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

inline const std::vector<double> kDefaultThresholds = {0.6, 0.7, 0.75, 0.8, 0.9};

/// A text is highly similar at threshold t when its neighbor count exceeds
/// fraction * n (or reaches it when strict is false). Throws
/// PreconditionError for fewer than two texts or unsorted thresholds.
SimilarityReport similarity_report(const Embeddings& e,
                                   const std::vector<double>& thresholds = kDefaultThresholds,
                                   double fraction = 0.1, bool strict = true);

}  // namespace lamar::diversity
