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
#include <string>
#include <vector>

#include "lamar/corpus.hpp"
#include "lamar/llm_gateway.hpp"
#include "lamar/types.hpp"

namespace lamar::enrichment {

struct FlattenLimits {
  std::size_t max_attr_num = 4;
  std::size_t max_token_num = 256;

  bool operator==(const FlattenLimits&) const = default;
};

/// Key-value pairs after truncation. token_count counts value words.
struct AttributeText {
  std::vector<Attribute> pairs;
  std::size_t token_count = 0;

  bool operator==(const AttributeText&) const = default;
};

/// Union of base attributes and signals. Throws MismatchError when a signal
/// belongs to another item, PreconditionError on repeated signal names.
EnrichedItem augment_item(const ItemRecord& item, const std::vector<SemanticSignal>& signals);

/// Orders pairs Title, Brand, Category, remaining base attributes, then
/// signals. Keeps at most max_attr_num pairs. Pairs are taken whole while
/// they fit the word budget; the first pair that does not fit is cut to the
/// remaining budget and every later pair is dropped.
AttributeText flatten_item(const EnrichedItem& item, const FlattenLimits& limits = {});

struct EnrichedSequence {
  std::string user_id;
  std::vector<EnrichedItem> items;
};

/// Fraction of (item, signal name) slots that found a stored signal.
struct Coverage {
  std::size_t found = 0;
  std::size_t requested = 0;

  double ratio() const {
    return requested == 0 ? 1.0 : static_cast<double>(found) / static_cast<double>(requested);
  }
  Coverage& operator+=(const Coverage& o) {
    found += o.found;
    requested += o.requested;
    return *this;
  }
};

/// Resolves signals for one item from the store; missing signals are
/// skipped and show up in the coverage count.
EnrichedItem enrich_item(const ItemRecord& item, const llm::SignalStore* store,
                         const std::vector<std::string>& signal_names,
                         const std::string& model_id, Coverage* coverage = nullptr);

/// Builds the enriched form of a user's sequence. Keeps the most recent
/// max_len items when max_len > 0.
EnrichedSequence enrich_sequence(const corpus::UserSequence& seq,
                                 const corpus::ItemCatalog& catalog,
                                 const llm::SignalStore* store,
                                 const std::vector<std::string>& signal_names,
                                 const std::string& model_id, Coverage* coverage = nullptr,
                                 std::size_t max_len = 50);

/// Flattened text of every catalog item, keyed by item id.
using ItemTexts = std::map<std::string, AttributeText>;

ItemTexts flatten_catalog(const corpus::ItemCatalog& catalog, const llm::SignalStore* store,
                          const std::vector<std::string>& signal_names,
                          const std::string& model_id, const FlattenLimits& limits,
                          Coverage* coverage = nullptr);

/// One JSON object per line: {"item_id", "pairs": [[key, value], ...]}.
void write_item_texts(const std::filesystem::path& path, const ItemTexts& texts);
ItemTexts read_item_texts(const std::filesystem::path& path);

/// One user per line: {"user_id", "items": [{"item_id", "attributes",
/// "signals"}]}.
void write_sequences(const std::filesystem::path& path,
                     const std::vector<EnrichedSequence>& sequences);

}  // namespace lamar::enrichment
