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

#include "lamar/config.hpp"

#include <algorithm>

#include "lamar/errors.hpp"
#include "lamar/io.hpp"

namespace lamar {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const json& j, const char* key, const fs::path& base, const fs::path& fallback = {}) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  fs::path p = j.at(key).get<std::string>();
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

json field_map_json(const corpus::FieldMap& m) {
  json items = json::array();
  for (const auto& [src, dst] : m.item_fields) items.push_back(json::array({src, dst}));
  return json{{"items", items},
              {"interactions",
               {{"user", m.user_field}, {"item", m.item_field}, {"timestamp", m.timestamp_field}}}};
}

corpus::FieldMap field_map_from_json(const json& j) {
  corpus::FieldMap m;
  if (auto it = j.find("items"); it != j.end()) {
    m.item_fields.clear();
    if (it->is_array()) {
      for (const auto& pair : *it) {
        m.item_fields.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      }
    } else {
      for (const auto& [src, dst] : it->items()) m.item_fields.emplace_back(src, dst.get<std::string>());
    }
  }
  if (auto it = j.find("interactions"); it != j.end()) {
    get_if(*it, "user", m.user_field);
    get_if(*it, "item", m.item_field);
    get_if(*it, "timestamp", m.timestamp_field);
  }
  return m;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base) {
  RunConfig c;
  try {
    get_if(j, "seed", c.seed);
    if (auto p = j.find("paths"); p != j.end()) {
      c.paths.items = resolve(*p, "items", base);
      c.paths.interactions = resolve(*p, "interactions", base);
      c.paths.signal_store = resolve(*p, "signal_store", base);
      c.paths.output_dir = resolve(*p, "output_dir", base, base.empty() ? fs::path("out") : base / "out");
    }
    if (auto f = j.find("field_map"); f != j.end()) c.corpus.field_map = field_map_from_json(*f);
    if (auto cc = j.find("corpus"); cc != j.end()) {
      get_if(*cc, "min_len", c.corpus.min_len);
      get_if(*cc, "pool_size", c.corpus.pool_size);
      get_if(*cc, "history_len", c.corpus.history_len);
    }
    if (auto b = j.find("backend"); b != j.end()) {
      if (b->contains("kind")) c.backend.kind = llm::backend_kind_from_string(b->at("kind").get<std::string>());
      get_if(*b, "model_id", c.backend.model_id);
      get_if(*b, "endpoint", c.backend.endpoint);
      get_if(*b, "api_key_env", c.backend.api_key_env);
      get_if(*b, "temperature", c.backend.temperature);
      get_if(*b, "max_output_tokens", c.backend.max_output_tokens);
      get_if(*b, "max_attempts", c.backend.max_attempts);
      get_if(*b, "initial_backoff_ms", c.backend.initial_backoff_ms);
      get_if(*b, "requests_per_minute", c.backend.requests_per_minute);
      get_if(*b, "max_in_flight", c.backend.max_in_flight);
      c.backend.mock_knowledge = resolve(*b, "mock_knowledge", base);
    }
    if (auto q = j.find("quality_filter"); q != j.end()) {
      get_if(*q, "min_words", c.quality_filter.min_words);
      get_if(*q, "max_words", c.quality_filter.max_words);
      get_if(*q, "refusal_markers", c.quality_filter.refusal_markers);
      get_if(*q, "max_attempts", c.max_filter_attempts);
    }
    if (auto p = j.find("prompting"); p != j.end()) {
      get_if(*p, "domain", c.prompting.domain);
      c.prompting.proposal_template = resolve(*p, "proposal_template", base);
      c.prompting.generation_template = resolve(*p, "generation_template", base);
      c.prompting.candidate_template = resolve(*p, "candidate_template", base);
      get_if(*p, "shot_count", c.prompting.shot_count);
      get_if(*p, "proposal_examples", c.prompting.proposal_examples);
      if (auto s = p->find("shots"); s != p->end()) {
        for (const auto& shot : *s) {
          c.prompting.shots.push_back({shot.at("item_attributes").get<std::string>(),
                                       shot.at("signal_text").get<std::string>()});
        }
      }
    }
    get_if(j, "signal_names", c.signal_names);
    if (auto e = j.find("enrichment"); e != j.end()) {
      get_if(*e, "max_attr_num", c.enrichment.limits.max_attr_num);
      get_if(*e, "max_token_num", c.enrichment.limits.max_token_num);
      get_if(*e, "max_sequence_len", c.enrichment.max_sequence_len);
    }
    if (auto m = j.find("model"); m != j.end()) {
      get_if(*m, "embed_dim", c.model.embed_dim);
      get_if(*m, "hash_buckets", c.model.hash_buckets);
      get_if(*m, "history_len", c.model.history_len);
      get_if(*m, "negatives_per_step", c.model.negatives_per_step);
      get_if(*m, "learning_rate", c.model.learning_rate);
      get_if(*m, "epochs", c.model.epochs);
      get_if(*m, "recency_decay", c.model.recency_decay);
      get_if(*m, "full_softmax", c.model.full_softmax);
      get_if(*m, "init_scale", c.model.init_scale);
      get_if(*m, "logit_scale", c.model.logit_scale);
    }
    c.model.seed = c.seed;
    if (auto e = j.find("evaluation"); e != j.end()) {
      if (e->contains("protocol")) {
        c.evaluation.protocol = eval::protocol_from_string(e->at("protocol").get<std::string>());
      }
      get_if(*e, "ks", c.evaluation.ks);
    }
    if (auto d = j.find("diversity"); d != j.end()) {
      if (d->contains("embedder")) {
        c.diversity.embedder.kind =
            diversity::embedder_kind_from_string(d->at("embedder").get<std::string>());
      }
      get_if(*d, "dim", c.diversity.embedder.dim);
      get_if(*d, "model_id", c.diversity.embedder.model_id);
      get_if(*d, "endpoint", c.diversity.embedder.endpoint);
      get_if(*d, "api_key_env", c.diversity.embedder.api_key_env);
      get_if(*d, "batch_size", c.diversity.embedder.batch_size);
      get_if(*d, "max_attempts", c.diversity.embedder.max_attempts);
      get_if(*d, "initial_backoff_ms", c.diversity.embedder.initial_backoff_ms);
      get_if(*d, "thresholds", c.diversity.thresholds);
      get_if(*d, "fraction", c.diversity.fraction);
      get_if(*d, "strict", c.diversity.strict);
    }
    if (auto r = j.find("report"); r != j.end()) {
      c.report.baseline_dir = resolve(*r, "baseline_dir", base);
      c.report.treatment_dir = resolve(*r, "treatment_dir", base);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return from_json(j, path.parent_path());
}

json RunConfig::to_json() const {
  json shots = json::array();
  for (const auto& s : prompting.shots) {
    shots.push_back(json{{"item_attributes", s.item_attributes}, {"signal_text", s.signal_text}});
  }
  return json{
      {"seed", seed},
      {"paths",
       {{"items", paths.items.string()},
        {"interactions", paths.interactions.string()},
        {"signal_store", paths.signal_store.string()},
        {"output_dir", paths.output_dir.string()}}},
      {"field_map", field_map_json(corpus.field_map)},
      {"corpus",
       {{"min_len", corpus.min_len}, {"pool_size", corpus.pool_size}, {"history_len", corpus.history_len}}},
      {"backend",
       {{"kind", llm::to_string(backend.kind)},
        {"model_id", backend.model_id},
        {"endpoint", backend.endpoint},
        {"api_key_env", backend.api_key_env},
        {"temperature", backend.temperature},
        {"max_output_tokens", backend.max_output_tokens},
        {"max_attempts", backend.max_attempts},
        {"initial_backoff_ms", backend.initial_backoff_ms},
        {"requests_per_minute", backend.requests_per_minute},
        {"max_in_flight", backend.max_in_flight},
        {"mock_knowledge", backend.mock_knowledge.string()}}},
      {"quality_filter",
       {{"min_words", quality_filter.min_words},
        {"max_words", quality_filter.max_words},
        {"refusal_markers", quality_filter.refusal_markers},
        {"max_attempts", max_filter_attempts}}},
      {"prompting",
       {{"domain", prompting.domain},
        {"proposal_template", prompting.proposal_template.string()},
        {"generation_template", prompting.generation_template.string()},
        {"candidate_template", prompting.candidate_template.string()},
        {"shot_count", prompting.shot_count},
        {"proposal_examples", prompting.proposal_examples},
        {"shots", shots}}},
      {"signal_names", signal_names},
      {"enrichment",
       {{"max_attr_num", enrichment.limits.max_attr_num},
        {"max_token_num", enrichment.limits.max_token_num},
        {"max_sequence_len", enrichment.max_sequence_len}}},
      {"model",
       {{"embed_dim", model.embed_dim},
        {"hash_buckets", model.hash_buckets},
        {"history_len", model.history_len},
        {"negatives_per_step", model.negatives_per_step},
        {"learning_rate", model.learning_rate},
        {"epochs", model.epochs},
        {"recency_decay", model.recency_decay},
        {"full_softmax", model.full_softmax},
        {"init_scale", model.init_scale},
        {"logit_scale", model.logit_scale}}},
      {"evaluation", {{"protocol", eval::to_string(evaluation.protocol)}, {"ks", evaluation.ks}}},
      {"diversity",
       {{"embedder", diversity::to_string(diversity.embedder.kind)},
        {"dim", diversity.embedder.dim},
        {"model_id", diversity.embedder.model_id},
        {"endpoint", diversity.embedder.endpoint},
        {"api_key_env", diversity.embedder.api_key_env},
        {"batch_size", diversity.embedder.batch_size},
        {"max_attempts", diversity.embedder.max_attempts},
        {"initial_backoff_ms", diversity.embedder.initial_backoff_ms},
        {"thresholds", diversity.thresholds},
        {"fraction", diversity.fraction},
        {"strict", diversity.strict}}},
      {"report",
       {{"baseline_dir", report.baseline_dir.string()},
        {"treatment_dir", report.treatment_dir.string()}}},
  };
}

void RunConfig::validate() const {
  model.validate();
  if (corpus.min_len < 3) throw ConfigError("corpus.min_len must be at least 3");
  if (corpus.history_len == 0) throw ConfigError("corpus.history_len must be positive");
  if (enrichment.limits.max_attr_num == 0 || enrichment.limits.max_token_num == 0) {
    throw ConfigError("enrichment limits must be positive");
  }
  if (evaluation.ks.empty()) throw ConfigError("evaluation.ks must not be empty");
  for (std::size_t k : evaluation.ks)
    if (k == 0) throw ConfigError("evaluation.ks entries must be positive");
  if (!std::is_sorted(diversity.thresholds.begin(), diversity.thresholds.end())) {
    throw ConfigError("diversity.thresholds must be ascending");
  }
  if (diversity.fraction < 0.0) throw ConfigError("diversity.fraction must be >= 0");
  if (backend.model_id.empty()) throw ConfigError("backend.model_id must be non-empty");
  if (backend.kind == llm::BackendKind::kHttpChat && backend.endpoint.empty()) {
    throw ConfigError("backend.endpoint is required for http_chat");
  }
  if (max_filter_attempts < 1) throw ConfigError("quality_filter.max_attempts must be >= 1");
  std::vector<std::string> names = signal_names;
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    throw ConfigError("signal_names contains duplicates");
  }
}

}  // namespace lamar
