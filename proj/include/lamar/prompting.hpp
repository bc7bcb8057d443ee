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
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lamar/types.hpp"

namespace lamar::prompting {

/// Text with `{name}` placeholders. Placeholder names are
/// [A-Za-z0-9_]+; any other brace usage is literal text.
class PromptTemplate {
 public:
  PromptTemplate(std::string name, std::string body, std::set<std::string> required);

  static PromptTemplate from_file(std::string name, const std::filesystem::path& path,
                                  std::set<std::string> required);

  const std::string& name() const { return name_; }
  const std::string& body() const { return body_; }
  const std::set<std::string>& required_placeholders() const { return required_; }
  std::set<std::string> placeholders() const;

  /// Substitutes every placeholder in one pass (bound values are never
  /// re-scanned). Throws PreconditionError for an unbound placeholder.
  std::string render(const std::map<std::string, std::string>& bindings) const;

 private:
  std::string name_;
  std::string body_;
  std::set<std::string> required_;
};

struct PromptText {
  std::string text;
  std::string template_name;
  std::string content_hash;  // 128-bit hex, pure function of text

  static PromptText make(std::string text, std::string template_name);
};

struct FewShotExample {
  std::string item_attributes;  // rendered key-value text
  std::string signal_text;

  bool operator==(const FewShotExample&) const = default;
};

/// "Key: value" lines, one per attribute, in record order.
std::string render_attributes(const ItemRecord& item);

/// Base attributes followed by one line per signal.
std::string render_attributes(const EnrichedItem& item);

/// Built-in template bodies; identical to the files under templates/.
const std::string& default_proposal_body();
const std::string& default_generation_body();
const std::string& default_candidate_body();

struct TemplateSet {
  PromptTemplate proposal;
  PromptTemplate generation;
  PromptTemplate candidate;

  static TemplateSet defaults();
  /// Empty paths keep the built-in body for that template.
  static TemplateSet load(const std::filesystem::path& proposal,
                          const std::filesystem::path& generation,
                          const std::filesystem::path& candidate);
};

/// Asks the model to propose one new signal name for a domain, using
/// n_examples sample items as context.
PromptText render_proposal_prompt(const TemplateSet& templates, const std::string& domain,
                                  const std::vector<ItemRecord>& samples,
                                  std::size_t n_examples);

/// Few-shot prompt requesting the value of signal_name for one item.
/// Throws ConfigError when shots.size() != expected_shots.
PromptText render_generation_prompt(const TemplateSet& templates,
                                    const std::string& signal_name,
                                    const std::vector<FewShotExample>& shots,
                                    const ItemRecord& item, std::size_t expected_shots = 3);

/// Candidate-pool recommendation prompt; candidates are labeled 1..n.
PromptText render_candidate_prompt(const TemplateSet& templates,
                                   const std::vector<EnrichedItem>& history,
                                   const std::vector<EnrichedItem>& candidates);

}  // namespace lamar::prompting
