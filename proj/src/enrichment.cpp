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

#include "lamar/enrichment.hpp"

#include <set>
#include <sstream>

#include "lamar/errors.hpp"
#include "lamar/io.hpp"
#include "lamar/text.hpp"

namespace lamar::enrichment {

using nlohmann::json;

EnrichedItem augment_item(const ItemRecord& item, const std::vector<SemanticSignal>& signals) {
  EnrichedItem out{item, {}};
  std::set<std::string> names;
  for (const auto& s : signals) {
    if (s.item_id != item.item_id) {
      throw MismatchError("signal for item '" + s.item_id + "' cannot augment item '" +
                          item.item_id + "'");
    }
    if (!names.insert(s.signal_name).second) {
      throw PreconditionError("signal '" + s.signal_name + "' given twice for item '" +
                              item.item_id + "'");
    }
    out.signals.push_back(s);
  }
  return out;
}

AttributeText flatten_item(const EnrichedItem& item, const FlattenLimits& limits) {
  if (limits.max_attr_num == 0 || limits.max_token_num == 0) {
    throw PreconditionError("flatten limits must be positive");
  }
  std::vector<const Attribute*> ordered;
  std::vector<Attribute> signal_pairs;
  for (const char* name : {kTitle, kBrand, kCategory}) {
    for (const auto& a : item.base.attributes)
      if (a.name == name) ordered.push_back(&a);
  }
  for (const auto& a : item.base.attributes) {
    if (a.name != kTitle && a.name != kBrand && a.name != kCategory) ordered.push_back(&a);
  }
  signal_pairs.reserve(item.signals.size());
  for (const auto& s : item.signals) signal_pairs.push_back({s.signal_name, s.text});
  for (const auto& a : signal_pairs) ordered.push_back(&a);

  AttributeText out;
  for (const Attribute* a : ordered) {
    if (out.pairs.size() == limits.max_attr_num) break;
    const std::size_t residual = limits.max_token_num - out.token_count;
    if (residual == 0) break;
    const std::size_t words = text::count_words(a->value);
    if (words == 0) continue;
    if (words <= residual) {
      out.pairs.push_back({a->name, text::first_words(a->value, words)});
      out.token_count += words;
      continue;
    }
    out.pairs.push_back({a->name, text::first_words(a->value, residual)});
    out.token_count += residual;
    break;
  }
  return out;
}

EnrichedItem enrich_item(const ItemRecord& item, const llm::SignalStore* store,
                         const std::vector<std::string>& signal_names,
                         const std::string& model_id, Coverage* coverage) {
  std::vector<SemanticSignal> found;
  for (const auto& name : signal_names) {
    if (coverage != nullptr) ++coverage->requested;
    if (store == nullptr) continue;
    if (auto s = store->lookup(item.item_id, name, model_id)) {
      found.push_back(std::move(*s));
      if (coverage != nullptr) ++coverage->found;
    }
  }
  return augment_item(item, found);
}

EnrichedSequence enrich_sequence(const corpus::UserSequence& seq,
                                 const corpus::ItemCatalog& catalog,
                                 const llm::SignalStore* store,
                                 const std::vector<std::string>& signal_names,
                                 const std::string& model_id, Coverage* coverage,
                                 std::size_t max_len) {
  EnrichedSequence out{seq.user_id, {}};
  const std::size_t n = seq.events.size();
  const std::size_t begin = (max_len > 0 && n > max_len) ? n - max_len : 0;
  out.items.reserve(n - begin);
  for (std::size_t i = begin; i < n; ++i) {
    out.items.push_back(
        enrich_item(catalog.at(seq.events[i].item_id), store, signal_names, model_id, coverage));
  }
  return out;
}

ItemTexts flatten_catalog(const corpus::ItemCatalog& catalog, const llm::SignalStore* store,
                          const std::vector<std::string>& signal_names,
                          const std::string& model_id, const FlattenLimits& limits,
                          Coverage* coverage) {
  ItemTexts out;
  for (const auto& [id, item] : catalog.items()) {
    out.emplace(id, flatten_item(enrich_item(item, store, signal_names, model_id, coverage),
                                 limits));
  }
  return out;
}

void write_item_texts(const std::filesystem::path& path, const ItemTexts& texts) {
  std::ostringstream out;
  for (const auto& [id, t] : texts) {
    json pairs = json::array();
    for (const auto& p : t.pairs) pairs.push_back(json::array({p.name, p.value}));
    out << json{{"item_id", id}, {"pairs", pairs}}.dump() << '\n';
  }
  io::write_file_atomic(path, out.str());
}

ItemTexts read_item_texts(const std::filesystem::path& path) {
  ItemTexts texts;
  io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      const json obj = json::parse(line);
      AttributeText t;
      for (const auto& p : obj.at("pairs")) {
        t.pairs.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
        t.token_count += text::count_words(t.pairs.back().value);
      }
      texts.emplace(obj.at("item_id").get<std::string>(), std::move(t));
    } catch (const std::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return texts;
}

void write_sequences(const std::filesystem::path& path,
                     const std::vector<EnrichedSequence>& sequences) {
  std::ostringstream out;
  for (const auto& seq : sequences) {
    json items = json::array();
    for (const auto& item : seq.items) {
      json attrs = json::array();
      for (const auto& a : item.base.attributes) attrs.push_back(json::array({a.name, a.value}));
      json sigs = json::array();
      for (const auto& s : item.signals) sigs.push_back(json::array({s.signal_name, s.text}));
      items.push_back({{"item_id", item.base.item_id}, {"attributes", attrs}, {"signals", sigs}});
    }
    out << json{{"user_id", seq.user_id}, {"items", items}}.dump() << '\n';
  }
  io::write_file_atomic(path, out.str());
}

}  // namespace lamar::enrichment
