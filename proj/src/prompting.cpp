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

#include "lamar/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "lamar/errors.hpp"
#include "lamar/io.hpp"
#include "lamar/text.hpp"

namespace lamar::prompting {
namespace {

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Calls on_text for literal runs and on_placeholder for each {name}.
template <typename OnText, typename OnPlaceholder>
void scan(const std::string& body, OnText on_text, OnPlaceholder on_placeholder) {
  std::size_t i = 0;
  std::size_t literal_start = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_name_char(body[j])) ++j;
      if (j < body.size() && body[j] == '}' && j > i + 1) {
        on_text(std::string_view(body).substr(literal_start, i - literal_start));
        on_placeholder(body.substr(i + 1, j - i - 1));
        i = j + 1;
        literal_start = i;
        continue;
      }
    }
    ++i;
  }
  on_text(std::string_view(body).substr(literal_start));
}

const char kProposalBody[] = R"lamar(You are curating item metadata for a sequential recommendation dataset in the "{domain}" domain.
Every item is described by these attributes: {attribute_names}.

Example items:
{examples}

Propose ONE new attribute that does not appear in the data, that can be inferred from the attributes above, and that would help predict which item a user interacts with next.
Let's think step by step. On the final line, write only the name of the new attribute.
)lamar";

const char kGenerationBody[] = R"lamar(Each item below is described by its metadata. The attribute "{signal_name}" captures a latent aspect of the item, such as its use case or intent, that the metadata does not state directly.

{examples}

Item:
{item_attributes}

Let's think step by step about who uses this item and why. Then write the "{signal_name}" of this item as one or two sentences, with no other text.
{signal_name}:
)lamar";

const char kCandidateBody[] = R"lamar(A user interacted with the following items, in chronological order:
{history}

Candidate items:
{candidates}

Which candidate will the user interact with next? Answer with exactly one candidate number from 1 to {n_candidates}.
)lamar";

std::string one_line(const EnrichedItem& item) {
  std::string out;
  auto add = [&out](const std::string& k, const std::string& v) {
    if (!out.empty()) out += " | ";
    out += k;
    out += ": ";
    out += v;
  };
  for (const auto& a : item.base.attributes) add(a.name, a.value);
  for (const auto& s : item.signals) add(s.signal_name, s.text);
  return out;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string body,
                               std::set<std::string> required)
    : name_(std::move(name)), body_(std::move(body)), required_(std::move(required)) {
  const auto present = placeholders();
  for (const auto& r : required_) {
    if (present.count(r) == 0) {
      throw ConfigError("template '" + name_ + "' is missing placeholder {" + r + "}");
    }
  }
}

PromptTemplate PromptTemplate::from_file(std::string name, const std::filesystem::path& path,
                                         std::set<std::string> required) {
  return PromptTemplate(std::move(name), io::read_file(path), std::move(required));
}

std::set<std::string> PromptTemplate::placeholders() const {
  std::set<std::string> out;
  scan(body_, [](std::string_view) {}, [&out](std::string p) { out.insert(std::move(p)); });
  return out;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
  std::string out;
  out.reserve(body_.size() * 2);
  scan(
      body_, [&out](std::string_view t) { out.append(t); },
      [&](const std::string& p) {
        auto it = bindings.find(p);
        if (it == bindings.end()) {
          throw PreconditionError("template '" + name_ + "': placeholder {" + p +
                                  "} is not bound");
        }
        out += it->second;
      });
  return out;
}

PromptText PromptText::make(std::string text, std::string template_name) {
  PromptText p;
  p.content_hash = text::content_hash(text);
  p.text = std::move(text);
  p.template_name = std::move(template_name);
  return p;
}

std::string render_attributes(const ItemRecord& item) {
  std::string out;
  for (const auto& a : item.attributes) {
    out += a.name;
    out += ": ";
    out += a.value;
    out += '\n';
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::string render_attributes(const EnrichedItem& item) {
  std::string out = render_attributes(item.base);
  for (const auto& s : item.signals) {
    out += '\n';
    out += s.signal_name;
    out += ": ";
    out += s.text;
  }
  return out;
}

const std::string& default_proposal_body() {
  static const std::string body = kProposalBody;
  return body;
}

const std::string& default_generation_body() {
  static const std::string body = kGenerationBody;
  return body;
}

const std::string& default_candidate_body() {
  static const std::string body = kCandidateBody;
  return body;
}

TemplateSet TemplateSet::defaults() {
  return load({}, {}, {});
}

TemplateSet TemplateSet::load(const std::filesystem::path& proposal,
                              const std::filesystem::path& generation,
                              const std::filesystem::path& candidate) {
  auto pick = [](const std::filesystem::path& p, const std::string& fallback) {
    return p.empty() ? fallback : io::read_file(p);
  };
  return TemplateSet{
      PromptTemplate("proposal", pick(proposal, default_proposal_body()),
                     {"domain", "attribute_names", "examples"}),
      PromptTemplate("generation", pick(generation, default_generation_body()),
                     {"signal_name", "examples", "item_attributes"}),
      PromptTemplate("candidate", pick(candidate, default_candidate_body()),
                     {"history", "candidates"}),
  };
}

PromptText render_proposal_prompt(const TemplateSet& templates, const std::string& domain,
                                  const std::vector<ItemRecord>& samples,
                                  std::size_t n_examples) {
  if (samples.empty()) throw PreconditionError("proposal prompt needs sample items");
  if (n_examples > samples.size()) {
    throw PreconditionError("n_examples exceeds the number of sample items");
  }
  std::vector<std::string> names;
  for (const auto& item : samples) {
    for (const auto& a : item.attributes) {
      if (std::find(names.begin(), names.end(), a.name) == names.end()) names.push_back(a.name);
    }
  }
  std::string attribute_names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) attribute_names += ", ";
    attribute_names += names[i];
  }
  std::string examples;
  for (std::size_t i = 0; i < n_examples; ++i) {
    if (i > 0) examples += "\n\n";
    examples += "Example " + std::to_string(i + 1) + ":\n";
    examples += render_attributes(samples[i]);
  }
  return PromptText::make(templates.proposal.render({{"domain", domain},
                                                     {"attribute_names", attribute_names},
                                                     {"examples", examples}}),
                          templates.proposal.name());
}

PromptText render_generation_prompt(const TemplateSet& templates,
                                    const std::string& signal_name,
                                    const std::vector<FewShotExample>& shots,
                                    const ItemRecord& item, std::size_t expected_shots) {
  if (shots.size() != expected_shots) {
    throw ConfigError("generation prompt expects " + std::to_string(expected_shots) +
                      " shots, got " + std::to_string(shots.size()));
  }
  const std::string* title = item.find(kTitle);
  if (title == nullptr || title->empty()) {
    throw PreconditionError("item '" + item.item_id + "' has no Title");
  }
  std::string examples;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const auto& shot = shots[i];
    if (text::trim(shot.item_attributes).empty() || text::trim(shot.signal_text).empty()) {
      throw ConfigError("few-shot example " + std::to_string(i + 1) + " has an empty field");
    }
    if (i > 0) examples += "\n\n";
    examples += "Example " + std::to_string(i + 1) + ":\n";
    examples += shot.item_attributes;
    examples += "\n" + signal_name + ": " + shot.signal_text;
  }
  return PromptText::make(templates.generation.render({{"signal_name", signal_name},
                                                       {"examples", examples},
                                                       {"item_attributes",
                                                        render_attributes(item)}}),
                          templates.generation.name());
}

PromptText render_candidate_prompt(const TemplateSet& templates,
                                   const std::vector<EnrichedItem>& history,
                                   const std::vector<EnrichedItem>& candidates) {
  if (history.empty()) throw PreconditionError("candidate prompt needs a non-empty history");
  if (candidates.size() < 2) throw PreconditionError("candidate prompt needs >= 2 candidates");
  std::string hist;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i > 0) hist += '\n';
    hist += std::to_string(i + 1) + ". " + one_line(history[i]);
  }
  std::string cands;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i > 0) cands += '\n';
    cands += "[" + std::to_string(i + 1) + "] " + one_line(candidates[i]);
  }
  return PromptText::make(
      templates.candidate.render({{"history", hist},
                                  {"candidates", cands},
                                  {"n_candidates", std::to_string(candidates.size())}}),
      templates.candidate.name());
}

}  // namespace lamar::prompting
