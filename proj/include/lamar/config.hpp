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

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lamar/corpus.hpp"
#include "lamar/diversity.hpp"
#include "lamar/enrichment.hpp"
#include "lamar/evalharness.hpp"
#include "lamar/llm_gateway.hpp"
#include "lamar/prompting.hpp"
#include "lamar/recmodel.hpp"

namespace lamar {

struct PathsConfig {
  std::filesystem::path items;
  std::filesystem::path interactions;
  std::filesystem::path signal_store;
  std::filesystem::path output_dir = "out";

  bool operator==(const PathsConfig&) const = default;
};

struct CorpusConfig {
  corpus::FieldMap field_map;
  std::size_t min_len = 3;
  std::size_t pool_size = 20;
  std::size_t history_len = 5;

  bool operator==(const CorpusConfig&) const = default;
};

struct PromptingConfig {
  std::string domain;
  std::filesystem::path proposal_template;  // empty = built-in
  std::filesystem::path generation_template;
  std::filesystem::path candidate_template;
  std::size_t shot_count = 3;
  std::vector<prompting::FewShotExample> shots;
  std::size_t proposal_examples = 4;

  bool operator==(const PromptingConfig&) const = default;
};

struct EnrichmentConfig {
  enrichment::FlattenLimits limits;
  std::size_t max_sequence_len = 50;

  bool operator==(const EnrichmentConfig&) const = default;
};

struct EvaluationConfig {
  eval::Protocol protocol = eval::Protocol::kFullCatalog;
  std::vector<std::size_t> ks = {10, 50};

  bool operator==(const EvaluationConfig&) const = default;
};

struct DiversityConfig {
  diversity::EmbedderConfig embedder;
  std::vector<double> thresholds = diversity::kDefaultThresholds;
  double fraction = 0.1;
  bool strict = true;

  bool operator==(const DiversityConfig&) const = default;
};

struct ReportConfig {
  std::filesystem::path baseline_dir;
  std::filesystem::path treatment_dir;

  bool operator==(const ReportConfig&) const = default;
};

/// Everything one experiment needs. Relative paths in the file are resolved
/// against the config file's directory.
struct RunConfig {
  PathsConfig paths;
  CorpusConfig corpus;
  llm::BackendConfig backend;
  llm::FilterConfig quality_filter;
  int max_filter_attempts = 3;
  PromptingConfig prompting;
  std::vector<std::string> signal_names;
  EnrichmentConfig enrichment;
  recmodel::ModelConfig model;
  EvaluationConfig evaluation;
  DiversityConfig diversity;
  ReportConfig report;
  std::uint64_t seed = 0;

  /// Throws ConfigError on malformed JSON or invalid values.
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;

  /// Value checks that do not touch the filesystem.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

}  // namespace lamar
