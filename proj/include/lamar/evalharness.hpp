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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lamar/corpus.hpp"
#include "lamar/enrichment.hpp"
#include "lamar/recmodel.hpp"

namespace lamar::eval {

enum class Protocol { kFullCatalog, kPool };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

/// Metrics of one ranked instance with a single relevant item.
struct InstanceMetrics {
  std::vector<std::size_t> ks;
  std::vector<double> ndcg;    // per k
  std::vector<double> recall;  // per k
  double mrr = 0.0;
  double auc = 0.0;
};

/// recall@k = [rank <= k], ndcg@k = [rank <= k] / log2(rank + 1),
/// mrr = 1 / rank, auc = (n - rank) / (n - 1) (1 when n == 1).
/// Throws PreconditionError unless 1 <= rank <= n_candidates.
InstanceMetrics rank_metrics(std::size_t rank, std::size_t n_candidates,
                             std::span<const std::size_t> ks);

/// Ordered (name, value) pairs: NDCG@k, Recall@k for each k, then MRR, AUC.
struct MetricsReport {
  Protocol protocol = Protocol::kFullCatalog;
  std::vector<std::size_t> ks;
  std::vector<std::pair<std::string, double>> metrics;
  std::size_t n_users = 0;

  /// Throws PreconditionError for an unknown metric name.
  double get(const std::string& name) const;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  std::string to_table() const;
  std::string to_csv() const;

  bool operator==(const MetricsReport&) const = default;
};

/// Per-user rank of the ground truth and the number of candidates ranked.
struct UserRank {
  std::size_t rank = 0;
  std::size_t n_candidates = 0;
};

/// Unweighted mean over users, summed in a fixed pairwise order.
MetricsReport aggregate(std::span<const UserRank> ranks, std::span<const std::size_t> ks,
                        Protocol protocol);

/// Everything evaluation needs, encoded once.
class Evaluator {
 public:
  Evaluator(const recmodel::Model& model, const enrichment::ItemTexts& texts);

  /// Full catalog: history is the training prefix plus the validation target;
  /// the target is ranked against every item. Pool: the pool instance's
  /// history and candidates. Ties are broken by item id.
  std::vector<UserRank> ranks_serial(const corpus::DatasetSplit& split, Protocol protocol) const;
  std::vector<UserRank> ranks_parallel(const corpus::DatasetSplit& split,
                                       Protocol protocol) const;

 private:
  UserRank rank_user(const corpus::DatasetSplit& split, std::size_t u, Protocol protocol) const;
  std::vector<double> history_vector(const std::vector<std::string>& ids) const;
  std::size_t index_of(const std::string& id) const;

  const recmodel::Model& model_;
  std::vector<std::string> ids_;  // sorted
  std::vector<recmodel::ItemFeatures> features_;
  kernels::Matrix encodings_;
};

/// Throws EmptyDatasetError when the split has no users.
MetricsReport evaluate(const recmodel::Model& model, const corpus::DatasetSplit& split,
                       const enrichment::ItemTexts& texts, Protocol protocol,
                       std::span<const std::size_t> ks);

struct ImprovementRow {
  std::string metric;
  double baseline = 0.0;
  double treatment = 0.0;
  /// Rounded half-up to 2 decimals; empty when the baseline is 0.
  std::optional<double> delta_percent;
  int sign = 0;

  /// "+5.15%", "-0.10%" or "n/a".
  std::string formatted_delta() const;
};

struct ImprovementTable {
  std::vector<ImprovementRow> rows;

  std::string to_table() const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// (treatment - baseline) / baseline * 100 rounded half-up to 2 decimals.
std::optional<double> percent_change(double baseline, double treatment);

/// Throws PreconditionError when protocols or metric sets differ.
ImprovementTable improvement_report(const MetricsReport& baseline,
                                    const MetricsReport& treatment);

}  // namespace lamar::eval
