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

#include "lamar/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "lamar/errors.hpp"
#include "lamar/random.hpp"
#include "lamar/text.hpp"

namespace lamar::diversity {

using nlohmann::json;

std::string to_string(EmbedderKind kind) {
  return kind == EmbedderKind::kHttpEmbeddingService ? "http_embedding_service"
                                                     : "builtin_hashed_tfidf";
}

EmbedderKind embedder_kind_from_string(const std::string& s) {
  if (s == "builtin_hashed_tfidf") return EmbedderKind::kBuiltinHashedTfidf;
  if (s == "http_embedding_service") return EmbedderKind::kHttpEmbeddingService;
  throw ConfigError("unknown embedder kind '" + s + "'");
}

namespace {

void normalize_row(kernels::SparseRow& r) {
  const double n = kernels::sparse_norm(r);
  if (n == 0.0) return;
  for (double& v : r.value) v /= n;
}

}  // namespace

Embeddings Embeddings::from_dense(const std::vector<std::vector<double>>& dense) {
  Embeddings e;
  e.dim = dense.empty() ? 0 : dense.front().size();
  for (const auto& v : dense) {
    if (v.size() != e.dim) throw PreconditionError("embedding rows differ in dimension");
    kernels::SparseRow r;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k] != 0.0) {
        r.index.push_back(k);
        r.value.push_back(v[k]);
      }
    }
    if (r.index.empty()) ++e.empty_texts;
    e.rows.push_back(std::move(r));
  }
  return e;
}

Embeddings embed_builtin(const std::vector<std::string>& texts, std::size_t dim) {
  if (dim == 0) throw ConfigError("embedding dim must be positive");
  Embeddings e;
  e.dim = dim;
  std::vector<std::map<std::size_t, double>> tf(texts.size());
  std::map<std::size_t, std::size_t> df;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (auto w : text::split_words(texts[i])) {
      const std::string tok = text::normalize_token(w);
      if (tok.empty()) continue;
      tf[i][static_cast<std::size_t>(splitmix64(text::fnv1a64(tok)) % dim)] += 1.0;
    }
    for (const auto& [b, _] : tf[i]) ++df[b];
  }
  const double n = static_cast<double>(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    kernels::SparseRow r;
    for (const auto& [b, count] : tf[i]) {
      const double idf = std::log((1.0 + n) / (1.0 + static_cast<double>(df[b]))) + 1.0;
      r.index.push_back(b);
      r.value.push_back(count * idf);
    }
    if (r.index.empty()) ++e.empty_texts;
    normalize_row(r);
    e.rows.push_back(std::move(r));
  }
  return e;
}

Embeddings embed_http(const std::vector<std::string>& texts, const EmbedderConfig& config,
                      http::Transport& transport,
                      std::function<void(std::chrono::milliseconds)> sleep) {
  if (config.endpoint.empty()) throw ConfigError("http embedder needs an endpoint");
  http::RetryPolicy retry;
  retry.max_attempts = config.max_attempts;
  retry.initial_backoff = std::chrono::milliseconds(config.initial_backoff_ms);
  retry.sleep = std::move(sleep);
  http::Headers headers;
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str()); key != nullptr && *key) {
      headers["Authorization"] = std::string("Bearer ") + key;
    }
  }
  std::string url = config.endpoint;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/embeddings";

  std::vector<std::vector<double>> dense(texts.size());
  std::vector<std::size_t> pending;  // indices of non-empty texts
  for (std::size_t i = 0; i < texts.size(); ++i)
    if (!text::trim(texts[i]).empty()) pending.push_back(i);

  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  std::size_t dim = 0;
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const std::size_t end = std::min(pending.size(), start + batch);
    json input = json::array();
    for (std::size_t p = start; p < end; ++p) input.push_back(texts[pending[p]]);
    const json res = http::post_json_with_retry(
        transport, url, json{{"model", config.model_id}, {"input", input}}, headers, retry);
    const auto& data = res.at("data");
    if (data.size() != end - start) {
      throw PermanentBackendError(200, "embedding service returned " +
                                           std::to_string(data.size()) + " rows for " +
                                           std::to_string(end - start) + " inputs");
    }
    for (std::size_t p = start; p < end; ++p) {
      auto v = data.at(p - start).at("embedding").get<std::vector<double>>();
      if (dim == 0) dim = v.size();
      if (v.size() != dim) throw PermanentBackendError(200, "inconsistent embedding dimension");
      kernels::normalize(v);
      dense[pending[p]] = std::move(v);
    }
  }
  for (auto& v : dense)
    if (v.empty()) v.assign(dim, 0.0);
  Embeddings e = Embeddings::from_dense(dense);
  e.dim = dim;
  return e;
}

Embeddings embed(const std::vector<std::string>& texts, const EmbedderConfig& config,
                 std::shared_ptr<http::Transport> transport) {
  if (texts.empty()) throw PreconditionError("embed needs at least one text");
  if (config.kind == EmbedderKind::kBuiltinHashedTfidf) return embed_builtin(texts, config.dim);
  if (!transport) transport = std::make_shared<http::HttplibTransport>();
  return embed_http(texts, config, *transport);
}

double row_cosine(const Embeddings& e, std::size_t i, std::size_t j) {
  const auto& a = e.rows[i];
  const auto& b = e.rows[j];
  const double na = kernels::sparse_norm(a);
  const double nb = kernels::sparse_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return kernels::sparse_dot(a, b) / (na * nb);
}

kernels::Matrix similarity_matrix(const Embeddings& e) {
  const std::size_t n = e.size();
  kernels::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double c = row_cosine(e, i, j);
      m.row(i)[j] = c;
      m.row(j)[i] = c;
    }
  }
  return m;
}

namespace serial {

std::vector<std::vector<std::size_t>> neighbor_counts(const Embeddings& e,
                                                      const std::vector<double>& thresholds) {
  const std::size_t n = e.size();
  std::vector<std::vector<std::size_t>> counts(thresholds.size(), std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = row_cosine(e, i, j);
      for (std::size_t t = 0; t < thresholds.size(); ++t) {
        if (c >= thresholds[t]) {
          ++counts[t][i];
          ++counts[t][j];
        }
      }
    }
  }
  return counts;
}

}  // namespace serial

namespace parallel {

std::vector<std::vector<std::size_t>> neighbor_counts(const Embeddings& e,
                                                      const std::vector<double>& thresholds) {
  const std::size_t n = e.size();
  std::vector<std::vector<std::size_t>> counts(thresholds.size(), std::vector<std::size_t>(n, 0));
  const auto rows = static_cast<long long>(n);
  // Each thread owns whole rows i and scans every j; cosine(i, j) and
  // cosine(j, i) are bitwise equal, so counts match the serial kernel.
#pragma omp parallel for schedule(dynamic, 8)
  for (long long ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double c = row_cosine(e, i, j);
      for (std::size_t t = 0; t < thresholds.size(); ++t)
        if (c >= thresholds[t]) ++counts[t][i];
    }
  }
  return counts;
}

}  // namespace parallel

SimilarityReport similarity_report(const Embeddings& e, const std::vector<double>& thresholds,
                                   double fraction, bool strict) {
  if (e.size() < 2) throw PreconditionError("similarity analysis needs at least two texts");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw PreconditionError("thresholds must be sorted ascending");
  }
  const auto counts = parallel::neighbor_counts(e, thresholds);
  SimilarityReport r;
  r.thresholds = thresholds;
  r.n_texts = e.size();
  r.fraction = fraction;
  r.strict = strict;
  const double cutoff = fraction * static_cast<double>(e.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    std::vector<bool> flags(e.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto c = static_cast<double>(counts[t][i]);
      flags[i] = strict ? c > cutoff : c >= cutoff;
      total += flags[i] ? 1 : 0;
    }
    r.highly_similar.push_back(total);
    r.flags.push_back(std::move(flags));
  }
  return r;
}

std::string SimilarityReport::to_csv() const {
  std::ostringstream out;
  out << "threshold,count,fraction_of_dataset\n";
  char buf[96];
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%g,%zu,%.6f\n", thresholds[t], highly_similar[t],
                  static_cast<double>(highly_similar[t]) / static_cast<double>(n_texts));
    out << buf;
  }
  return out.str();
}

json SimilarityReport::to_json() const {
  json rows = json::array();
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    rows.push_back(json{{"threshold", thresholds[t]}, {"count", highly_similar[t]}});
  }
  return json{{"n_texts", n_texts}, {"fraction", fraction}, {"strict", strict}, {"rows", rows}};
}

}  // namespace lamar::diversity
