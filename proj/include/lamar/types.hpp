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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lamar {

struct Attribute {
  std::string name;
  std::string value;

  bool operator==(const Attribute&) const = default;
};

inline constexpr const char* kTitle = "Title";
inline constexpr const char* kBrand = "Brand";
inline constexpr const char* kCategory = "Category";

/// An item's structured attributes. Title is always present and non-empty
/// for records held by an ItemCatalog.
struct ItemRecord {
  std::string item_id;
  std::vector<Attribute> attributes;

  /// nullptr when the attribute is absent.
  const std::string* find(std::string_view name) const {
    for (const auto& a : attributes)
      if (a.name == name) return &a.value;
    return nullptr;
  }

  bool operator==(const ItemRecord&) const = default;
};

/// One generated semantic signal with its provenance.
struct SemanticSignal {
  std::string item_id;
  std::string signal_name;
  std::string text;
  std::string model_id;
  std::string prompt_hash;
  std::int64_t created_at = 0;  // unix seconds

  bool operator==(const SemanticSignal&) const = default;
};

/// An item's base attributes together with the signals fused into it.
struct EnrichedItem {
  ItemRecord base;
  std::vector<SemanticSignal> signals;

  bool operator==(const EnrichedItem&) const = default;
};

}  // namespace lamar
