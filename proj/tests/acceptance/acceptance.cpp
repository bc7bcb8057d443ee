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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include "lamar/config.hpp"
#include "lamar/diversity.hpp"
#include "lamar/enrichment.hpp"
#include "lamar/evalharness.hpp"
#include "lamar/io.hpp"
#include "lamar/pipeline.hpp"
#include "lamar/random.hpp"
#include "lamar/recmodel.hpp"
#include "lamar/synthetic.hpp"
#include "lamar/text.hpp"
#include "temp_dir.hpp"

using namespace lamar;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kMetricTolerance = 1e-12;
constexpr double kMetricBudgetSec = 5.0;
constexpr float kFiniteDifferenceStep = 1e-4f;
constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientBudgetSec = 1.0;
constexpr double kMinRecallLift = 0.20;
constexpr double kMinEnrichedRecall = 0.60;
constexpr double kLiftBudgetSec = 120.0;
constexpr double kDuplicateCosine = 0.95;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Brute force over an explicit binary relevance list.
eval::InstanceMetrics brute_force(std::size_t rank, std::size_t n, const std::vector<std::size_t>& ks) {
  std::vector<int> rel(n, 0);
  rel[rank - 1] = 1;
  eval::InstanceMetrics m;
  m.ks = ks;
  for (auto k : ks) {
    double dcg = 0.0, hits = 0.0;
    for (std::size_t i = 0; i < std::min(k, n); ++i) {
      dcg += rel[i] / std::log2(static_cast<double>(i) + 2.0);
      hits += rel[i];
    }
    m.ndcg.push_back(dcg);  // ideal DCG is 1 with one relevant item
    m.recall.push_back(hits);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (rel[i] == 1) {
      m.mrr = 1.0 / static_cast<double>(i + 1);
      break;
    }
  std::size_t wins = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (rel[i] == 1 && rel[j] == 0 && i < j) ++wins;
  m.auc = static_cast<double>(wins) / static_cast<double>(n - 1);
  return m;
}

Outcome metric_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::size_t> ks = {1, 5, 10, 20, 50};
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.uniform_index(999);
    const std::size_t rank = 1 + rng.uniform_index(n);
    const auto a = eval::rank_metrics(rank, n, ks);
    const auto b = brute_force(rank, n, ks);
    for (std::size_t k = 0; k < ks.size(); ++k) {
      worst = std::max({worst, std::abs(a.ndcg[k] - b.ndcg[k]), std::abs(a.recall[k] - b.recall[k])});
    }
    worst = std::max({worst, std::abs(a.mrr - b.mrr), std::abs(a.auc - b.auc)});
  }
  const double sec = seconds_since(t0);
  return {worst < kMetricTolerance && sec < kMetricBudgetSec,
          fmt("max |delta| %.3g over 1000 pairs in %.2fs", worst, sec)};
}

Outcome table_formatting() {
  const std::vector<std::pair<double, double>> pairs = {
      {0.0680, 0.0715}, {0.1039, 0.1102}, {0.1052, 0.1114}, {0.0977, 0.1044}, {0.6135, 0.8873}};
  const std::vector<std::string> expected = {"+5.15%", "+6.06%", "+5.89%", "+6.86%", "+44.63%"};
  eval::MetricsReport base, treat;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    base.metrics.emplace_back("m" + std::to_string(i), pairs[i].first);
    treat.metrics.emplace_back("m" + std::to_string(i), pairs[i].second);
  }
  const auto table = eval::improvement_report(base, treat);
  std::string got;
  bool ok = true;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    got += (i ? " " : "") + table.rows[i].formatted_delta();
    ok = ok && table.rows[i].formatted_delta() == expected[i];
  }
  return {ok, got};
}

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  recmodel::ModelConfig cfg;
  cfg.embed_dim = 6;
  cfg.hash_buckets = 4096;
  cfg.init_scale = 0.5;
  cfg.seed = 3;
  auto m = recmodel::Model::initialize(cfg);
  using recmodel::token_bucket;
  const recmodel::ItemFeatures h{{token_bucket(kTitle, "h1", 4096), token_bucket(kTitle, "h2", 4096)}};
  const recmodel::ItemFeatures c0{{token_bucket(kTitle, "c0", 4096)}};
  const recmodel::ItemFeatures c1{{token_bucket(kTitle, "c1", 4096)}};
  const recmodel::ItemFeatures c2{{token_bucket(kTitle, "c2", 4096)}};
  const recmodel::Example ex{{&h}, {&c0, &c1, &c2}, 1};

  recmodel::SparseGrad g;
  recmodel::example_loss(m, ex, &g);
  double worst = 0.0;
  for (const auto& [bucket, grad] : g) {
    for (std::size_t k = 0; k < grad.size(); ++k) {
      float& p = m.row(bucket)[k];
      const float orig = p;
      p = orig + kFiniteDifferenceStep;
      const double up = p;
      const double lu = recmodel::example_loss(m, ex, nullptr);
      p = orig - kFiniteDifferenceStep;
      const double down = p;
      const double ld = recmodel::example_loss(m, ex, nullptr);
      p = orig;
      const double numeric = (lu - ld) / (up - down);
      const double denom = std::max(std::abs(numeric), std::abs(grad[k]));
      if (denom > 0.0) worst = std::max(worst, std::abs(numeric - grad[k]) / denom);
    }
  }
  const double sec = seconds_since(t0);
  return {g.size() == 5 && worst < kGradientTolerance && sec < kGradientBudgetSec,
          fmt("%g tokens, max relative error %.3g in %.3fs", static_cast<double>(g.size()), worst, sec)};
}

pipeline::Hooks offline_hooks() {
  pipeline::Hooks h;
  h.transport = std::make_shared<http::RefusingTransport>();
  h.clock = [] { return std::int64_t{1700000000}; };
  return h;
}

double recall_at_10(const fs::path& out) {
  return eval::MetricsReport::from_json(nlohmann::json::parse(io::read_file(out / "reports/metrics.json")))
      .get("Recall@10");
}

Outcome augmentation_lift(const fs::path& root, RunConfig* treatment_out) {
  omp_set_num_threads(1);
  const auto t0 = std::chrono::steady_clock::now();
  const auto files = synthetic::write_corpus(root / "corpus");  // 200 items, 500 users
  auto treat = RunConfig::load(files.config);
  treat.paths.output_dir = root / "treatment";
  treat.paths.signal_store = root / "treatment/signals.jsonl";
  auto base = treat;
  base.paths.output_dir = root / "baseline";
  base.signal_names.clear();

  pipeline::Pipeline(treat, offline_hooks()).run(pipeline::parse_stages("generate,enrich,train,evaluate"));
  pipeline::Pipeline(base, offline_hooks()).run(pipeline::parse_stages("enrich,train,evaluate"));
  const double sec = seconds_since(t0);
  const double r_treat = recall_at_10(treat.paths.output_dir);
  const double r_base = recall_at_10(base.paths.output_dir);
  *treatment_out = treat;
  return {r_treat - r_base >= kMinRecallLift && r_treat >= kMinEnrichedRecall && sec < kLiftBudgetSec,
          fmt("Recall@10 enriched %.4f, base-only %.4f, %.1fs single thread", r_treat, r_base, sec)};
}

Outcome cache_and_determinism(const fs::path& root, const RunConfig& first) {
  pipeline::Pipeline again(first, offline_hooks());
  again.run({pipeline::Stage::kGenerate});
  const auto calls = again.backend_calls();

  auto second = first;
  second.paths.output_dir = root / "treatment_rerun";
  second.paths.signal_store = root / "treatment_rerun/signals.jsonl";
  pipeline::Pipeline(second, offline_hooks()).run(pipeline::parse_stages("generate,enrich,train,evaluate"));
  const bool same_model = io::read_file(first.paths.output_dir / "checkpoints/model.bin") ==
                          io::read_file(second.paths.output_dir / "checkpoints/model.bin");
  const bool same_metrics = io::read_file(first.paths.output_dir / "reports/metrics.json") ==
                            io::read_file(second.paths.output_dir / "reports/metrics.json");
  std::ostringstream d;
  d << "repeat generate made " << calls << " backend calls; checkpoints "
    << (same_model ? "identical" : "differ") << "; metrics " << (same_metrics ? "identical" : "differ");
  return {calls == 0 && same_model && same_metrics, d.str()};
}

std::vector<double> unit(std::size_t dim, std::size_t k) {
  std::vector<double> v(dim, 0.0);
  v[k] = 1.0;
  return v;
}

Outcome diversity_fixtures() {
  const std::size_t dim = 32;
  std::vector<std::vector<double>> mixed, orth;
  for (std::size_t i = 0; i < 5; ++i) {
    auto v = unit(dim, 0);
    v[0] = std::sqrt(kDuplicateCosine);
    v[1 + i] = std::sqrt(1.0 - kDuplicateCosine);
    mixed.push_back(v);
  }
  for (std::size_t i = 0; i < 15; ++i) mixed.push_back(unit(dim, 10 + i));
  for (std::size_t i = 0; i < 20; ++i) orth.push_back(unit(dim, i));

  const auto dup = diversity::similarity_report(diversity::Embeddings::from_dense(mixed), {0.9});
  const auto zero = diversity::similarity_report(diversity::Embeddings::from_dense(orth));
  bool ok = dup.highly_similar[0] == 5;
  for (auto c : zero.highly_similar) ok = ok && c == 0;

  Rng rng(6);
  const std::vector<std::string> vocab = {"fish", "tank", "food", "game", "play", "fun",
                                          "paint", "brush", "desk", "pen", "clean", "water"};
  std::size_t monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> texts;
    const auto n = 2 + rng.uniform_index(40);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string t;
      for (std::uint64_t k = 0, len = 1 + rng.uniform_index(5); k < len; ++k)
        t += vocab[rng.uniform_index(vocab.size())] + " ";
      texts.push_back(t);
    }
    const auto r = diversity::similarity_report(diversity::embed_builtin(texts, 1u << 12));
    if (std::is_sorted(r.highly_similar.rbegin(), r.highly_similar.rend())) ++monotone;
  }
  ok = ok && monotone == 100;
  std::ostringstream d;
  d << "count " << dup.highly_similar[0] << " at t=0.9, orthogonal max "
    << *std::max_element(zero.highly_similar.begin(), zero.highly_similar.end()) << ", monotone on "
    << monotone << "/100 corpora";
  return {ok, d.str()};
}

std::string random_words(Rng& rng, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += " ";
    for (std::uint64_t k = 0, len = 1 + rng.uniform_index(6); k < len; ++k)
      out.push_back(static_cast<char>('a' + rng.uniform_index(26)));
  }
  return out;
}

ItemRecord random_item(Rng& rng, const std::string& id) {
  ItemRecord r{id, {{kTitle, random_words(rng, 1 + rng.uniform_index(12))}}};
  std::vector<std::string> names = {kBrand, kCategory, "Color", "Size"};
  rng.shuffle(std::span<std::string>(names));
  for (std::uint64_t i = 0, n = rng.uniform_index(names.size() + 1); i < n; ++i)
    r.attributes.push_back({names[i], random_words(rng, 1 + rng.uniform_index(40))});
  return r;
}

Outcome enrichment_laws() {
  Rng rng(7);
  std::size_t violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto base = random_item(rng, "x");
    std::vector<SemanticSignal> sigs;
    for (std::uint64_t s = 0, n = rng.uniform_index(3); s < n; ++s)
      sigs.push_back({"x", "Signal " + std::to_string(s), random_words(rng, 1 + rng.uniform_index(60)), "m", "h", 0});
    const enrichment::FlattenLimits lim{1 + static_cast<std::size_t>(rng.uniform_index(6)),
                                        1 + static_cast<std::size_t>(rng.uniform_index(120))};
    const auto aug = enrichment::augment_item(base, sigs);
    if (!(enrichment::augment_item(base, {}) == EnrichedItem{base, {}})) ++violations;
    // Superset: every base attribute survives augmentation unchanged.
    if (!(aug.base == base) || aug.signals.size() != sigs.size()) ++violations;
    const auto with = enrichment::flatten_item(aug, lim);
    const auto without = enrichment::flatten_item({base, {}}, lim);
    if (with.pairs.size() > lim.max_attr_num || with.token_count > lim.max_token_num) ++violations;
    std::size_t words = 0;
    for (const auto& p : with.pairs) words += text::count_words(p.value);
    if (words != with.token_count) ++violations;
    for (std::size_t k = 0; k < without.pairs.size() && k < with.pairs.size(); ++k)
      if (base.find(with.pairs[k].name) != nullptr && !(with.pairs[k] == without.pairs[k])) ++violations;
  }

  corpus::ItemCatalog cat;
  for (int i = 0; i < 40; ++i) cat.insert(random_item(rng, "i" + std::to_string(i)));
  for (int trial = 0; trial < 1000; ++trial) {
    corpus::UserSequence seq{"u", {}};
    const auto len = 1 + rng.uniform_index(80);
    for (std::uint64_t k = 0; k < len; ++k)
      seq.events.push_back({"i" + std::to_string(rng.uniform_index(40)), static_cast<std::int64_t>(k)});
    const auto e = enrichment::enrich_sequence(seq, cat, nullptr, {"S"}, "m");
    const std::size_t offset = len - e.items.size();
    for (std::size_t k = 0; k < e.items.size(); ++k)
      if (e.items[k].base.item_id != seq.events[offset + k].item_id) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations over 1000 items and 1000 sequences"};
}

Outcome protocol_integrity() {
  corpus::ItemCatalog cat;
  for (int i = 0; i < 300; ++i) cat.insert({"p" + std::to_string(i), {{kTitle, "Item " + std::to_string(i)}}});
  Rng rng(8);
  std::vector<corpus::UserSequence> seqs;
  for (int u = 0; u < 10000; ++u) {
    corpus::UserSequence s{"u" + std::to_string(u), {}};
    for (std::uint64_t k = 0, len = 3 + rng.uniform_index(30); k < len; ++k)
      s.events.push_back({"p" + std::to_string(rng.uniform_index(300)), static_cast<std::int64_t>(k)});
    seqs.push_back(std::move(s));
  }
  corpus::SplitOptions opt;
  opt.seed = 8;
  const auto split = corpus::split_leave_one_out(seqs, cat, opt);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < split.pool_instances.size(); ++i) {
    const auto& p = split.pool_instances[i];
    const std::set<std::string> distinct(p.candidates.begin(), p.candidates.end());
    const auto target = split.users[i].test_target;
    const auto hits = std::count(p.candidates.begin(), p.candidates.end(), target);
    if (p.candidates.size() != 21 || distinct.size() != 21 || hits != 1 || p.target() != target) ++bad;
  }
  return {split.pool_instances.size() == 10000 && bad == 0,
          std::to_string(split.pool_instances.size()) + " instances, " + std::to_string(bad) + " malformed"};
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  lamar::testing::TempDir root;
  RunConfig treatment;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracle equivalence", metric_oracle},
      {"improvement table formatting", table_formatting},
      {"sampled-softmax gradient check", gradient_check},
      {"synthetic augmentation lift", [&] { return augmentation_lift(root.path(), &treatment); }},
      {"cache and determinism",
       [&] {
         if (treatment.paths.output_dir.empty()) return Outcome{false, "lift run did not complete"};
         return cache_and_determinism(root.path(), treatment);
       }},
      {"diversity analysis", diversity_fixtures},
      {"enrichment laws", enrichment_laws},
      {"protocol integrity", protocol_integrity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto o = guarded(criteria[i].second);
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
