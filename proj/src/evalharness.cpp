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

#include "lamar/evalharness.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "lamar/errors.hpp"

namespace lamar::eval {

using nlohmann::json;

std::string to_string(Protocol p) { return p == Protocol::kPool ? "pool" : "full_catalog"; }

Protocol protocol_from_string(const std::string& s) {
  if (s == "pool") return Protocol::kPool;
  if (s == "full_catalog") return Protocol::kFullCatalog;
  throw ConfigError("unknown evaluation protocol '" + s + "'");
}

InstanceMetrics rank_metrics(std::size_t rank, std::size_t n_candidates,
                             std::span<const std::size_t> ks) {
  if (rank < 1 || rank > n_candidates) {
    throw PreconditionError("rank " + std::to_string(rank) + " outside [1, " +
                            std::to_string(n_candidates) + "]");
  }
  InstanceMetrics m;
  m.ks.assign(ks.begin(), ks.end());
  for (std::size_t k : ks) {
    const bool hit = rank <= k;
    m.recall.push_back(hit ? 1.0 : 0.0);
    m.ndcg.push_back(hit ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0);
  }
  m.mrr = 1.0 / static_cast<double>(rank);
  m.auc = n_candidates == 1 ? 1.0
                            : static_cast<double>(n_candidates - rank) /
                                  static_cast<double>(n_candidates - 1);
  return m;
}

double MetricsReport::get(const std::string& name) const {
  for (const auto& [n, v] : metrics)
    if (n == name) return v;
  throw PreconditionError("report has no metric '" + name + "'");
}

json MetricsReport::to_json() const {
  json m = json::array();
  for (const auto& [n, v] : metrics) m.push_back(json{{"name", n}, {"value", v}});
  return json{{"protocol", to_string(protocol)}, {"ks", ks}, {"n_users", n_users},
              {"metrics", m}};
}

MetricsReport MetricsReport::from_json(const json& j) {
  MetricsReport r;
  r.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  r.ks = j.at("ks").get<std::vector<std::size_t>>();
  r.n_users = j.at("n_users").get<std::size_t>();
  for (const auto& m : j.at("metrics")) {
    r.metrics.emplace_back(m.at("name").get<std::string>(), m.at("value").get<double>());
  }
  return r;
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "protocol: %s  users: %zu\n", to_string(protocol).c_str(),
                n_users);
  out << buf;
  for (const auto& [n, v] : metrics) {
    std::snprintf(buf, sizeof buf, "%-10s %.4f\n", n.c_str(), v);
    out << buf;
  }
  return out.str();
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "metric,value\n";
  char buf[64];
  for (const auto& [n, v] : metrics) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << n << ',' << buf << '\n';
  }
  return out.str();
}

MetricsReport aggregate(std::span<const UserRank> ranks, std::span<const std::size_t> ks,
                        Protocol protocol) {
  if (ranks.empty()) throw EmptyDatasetError("no users to evaluate");
  const std::size_t n = ranks.size();
  const std::size_t nk = ks.size();
  // columns: ndcg per k, recall per k, mrr, auc
  std::vector<std::vector<double>> cols(2 * nk + 2, std::vector<double>(n));
  for (std::size_t u = 0; u < n; ++u) {
    const auto m = rank_metrics(ranks[u].rank, ranks[u].n_candidates, ks);
    for (std::size_t k = 0; k < nk; ++k) {
      cols[k][u] = m.ndcg[k];
      cols[nk + k][u] = m.recall[k];
    }
    cols[2 * nk][u] = m.mrr;
    cols[2 * nk + 1][u] = m.auc;
  }
  MetricsReport r;
  r.protocol = protocol;
  r.ks.assign(ks.begin(), ks.end());
  r.n_users = n;
  auto mean = [n](const std::vector<double>& c) {
    return kernels::pairwise_sum(c) / static_cast<double>(n);
  };
  for (std::size_t k = 0; k < nk; ++k) {
    r.metrics.emplace_back("NDCG@" + std::to_string(ks[k]), mean(cols[k]));
    r.metrics.emplace_back("Recall@" + std::to_string(ks[k]), mean(cols[nk + k]));
  }
  r.metrics.emplace_back("MRR", mean(cols[2 * nk]));
  r.metrics.emplace_back("AUC", mean(cols[2 * nk + 1]));
  return r;
}

Evaluator::Evaluator(const recmodel::Model& model, const enrichment::ItemTexts& texts)
    : model_(model) {
  ids_.reserve(texts.size());
  features_.reserve(texts.size());
  for (const auto& [id, t] : texts) {
    ids_.push_back(id);
    features_.push_back(recmodel::featurize(t, model.config().hash_buckets));
  }
  encodings_ = recmodel::parallel::encode_all(model, features_);
}

std::size_t Evaluator::index_of(const std::string& id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) throw PreconditionError("item '" + id + "' has no text");
  return static_cast<std::size_t>(it - ids_.begin());
}

std::vector<double> Evaluator::history_vector(const std::vector<std::string>& ids) const {
  std::vector<const recmodel::ItemFeatures*> hist;
  hist.reserve(ids.size());
  for (const auto& id : ids) hist.push_back(&features_[index_of(id)]);
  return recmodel::encode_history_features(hist, model_);
}

UserRank Evaluator::rank_user(const corpus::DatasetSplit& split, std::size_t u,
                              Protocol protocol) const {
  const auto& user = split.users[u];
  if (protocol == Protocol::kPool) {
    if (u >= split.pool_instances.size()) {
      throw PreconditionError("split has no pool instance for user '" + user.user_id + "'");
    }
    const auto& pool = split.pool_instances[u];
    const auto h = history_vector(pool.history);
    const std::string& target = pool.target();
    const double ts = kernels::dot(h, encodings_.row(index_of(target)));
    std::size_t rank = 1;
    for (const auto& c : pool.candidates) {
      if (c == target) continue;
      const double s = kernels::dot(h, encodings_.row(index_of(c)));
      if (s > ts || (s == ts && c < target)) ++rank;
    }
    return {rank, pool.candidates.size()};
  }
  std::vector<std::string> hist_ids = user.train;
  hist_ids.push_back(user.validation_target);
  const auto h = history_vector(hist_ids);
  const auto scores = kernels::serial::matvec(encodings_, h);
  const std::size_t t = index_of(user.test_target);
  const double ts = scores[t];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == t) continue;
    if (scores[i] > ts || (scores[i] == ts && i < t)) ++rank;  // ids_ is sorted
  }
  return {rank, scores.size()};
}

std::vector<UserRank> Evaluator::ranks_serial(const corpus::DatasetSplit& split,
                                              Protocol protocol) const {
  std::vector<UserRank> out(split.users.size());
  for (std::size_t u = 0; u < out.size(); ++u) out[u] = rank_user(split, u, protocol);
  return out;
}

std::vector<UserRank> Evaluator::ranks_parallel(const corpus::DatasetSplit& split,
                                                Protocol protocol) const {
  std::vector<UserRank> out(split.users.size());
  const auto n = static_cast<long long>(out.size());
  // Users are independent; each writes only its own slot.
#pragma omp parallel for schedule(dynamic, 16)
  for (long long u = 0; u < n; ++u) {
    out[static_cast<std::size_t>(u)] = rank_user(split, static_cast<std::size_t>(u), protocol);
  }
  return out;
}

MetricsReport evaluate(const recmodel::Model& model, const corpus::DatasetSplit& split,
                       const enrichment::ItemTexts& texts, Protocol protocol,
                       std::span<const std::size_t> ks) {
  if (split.users.empty()) throw EmptyDatasetError("split has no test users");
  const Evaluator evaluator(model, texts);
  const auto ranks = evaluator.ranks_parallel(split, protocol);
  return aggregate(ranks, ks, protocol);
}

std::optional<double> percent_change(double baseline, double treatment) {
  if (baseline == 0.0) return std::nullopt;
  const double d = (treatment - baseline) / baseline * 100.0;
  // The epsilon absorbs binary representation error at exact .xx5 ties.
  return std::floor(d * 100.0 + 0.5 + 1e-9) / 100.0;
}

std::string ImprovementRow::formatted_delta() const {
  if (!delta_percent) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f%%", *delta_percent == 0.0 ? 0.0 : *delta_percent);
  return buf;
}

std::string ImprovementTable::to_table() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s %10s\n", "metric", "baseline", "treatment",
                "delta");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %10.4f %10.4f %10s\n", r.metric.c_str(), r.baseline,
                  r.treatment, r.formatted_delta().c_str());
    out << buf;
  }
  return out.str();
}

std::string ImprovementTable::to_csv() const {
  std::ostringstream out;
  out << "metric,baseline,treatment,delta_percent\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.metric << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.baseline);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.treatment);
    out << buf << ',';
    if (r.delta_percent) {
      std::snprintf(buf, sizeof buf, "%.2f", *r.delta_percent);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

json ImprovementTable::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back(json{{"metric", r.metric},
                             {"baseline", r.baseline},
                             {"treatment", r.treatment},
                             {"delta_percent", r.delta_percent ? json(*r.delta_percent) : json()},
                             {"sign", r.sign},
                             {"formatted", r.formatted_delta()}});
  }
  return json{{"rows", rows_json}};
}

ImprovementTable improvement_report(const MetricsReport& baseline,
                                    const MetricsReport& treatment) {
  if (baseline.protocol != treatment.protocol) {
    throw PreconditionError("cannot compare reports from different protocols");
  }
  if (baseline.metrics.size() != treatment.metrics.size()) {
    throw PreconditionError("reports carry different metric sets");
  }
  ImprovementTable table;
  for (std::size_t i = 0; i < baseline.metrics.size(); ++i) {
    const auto& [name, b] = baseline.metrics[i];
    if (treatment.metrics[i].first != name) {
      throw PreconditionError("reports carry different metric sets");
    }
    ImprovementRow row;
    row.metric = name;
    row.baseline = b;
    row.treatment = treatment.metrics[i].second;
    row.delta_percent = percent_change(b, row.treatment);
    // Sign follows the printed delta; with no delta, the raw difference.
    const double d = row.delta_percent ? *row.delta_percent : row.treatment - b;
    row.sign = (d > 0) - (d < 0);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace lamar::eval
