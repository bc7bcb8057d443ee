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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lamar/types.hpp"

namespace lamar::corpus {

/// Source-field to canonical-name mapping for item and interaction files.
///
/// Item fields map onto "item_id" or onto attribute names (Title, Brand,
/// Category, ...). Attributes keep the order of item_fields. Interaction
/// fields name the source keys that hold user, item and timestamp.
struct FieldMap {
  std::vector<std::pair<std::string, std::string>> item_fields = {
      {"item_id", "item_id"},
      {"title", kTitle},
      {"brand", kBrand},
      {"category", kCategory}};
  std::string user_field = "user_id";
  std::string item_field = "item_id";
  std::string timestamp_field = "timestamp";

  bool operator==(const FieldMap&) const = default;
};

class ItemCatalog {
 public:
  ItemCatalog() = default;

  /// Returns false (and keeps the existing record) on a duplicate id.
  bool insert(ItemRecord record);

  const ItemRecord* find(const std::string& item_id) const;
  const ItemRecord& at(const std::string& item_id) const;
  bool contains(const std::string& item_id) const { return items_.count(item_id) > 0; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  /// Sorted by item_id.
  const std::map<std::string, ItemRecord>& items() const { return items_; }
  std::vector<std::string> ids() const;

  bool operator==(const ItemCatalog&) const = default;

 private:
  std::map<std::string, ItemRecord> items_;
};

struct LoadWarning {
  std::size_t line = 0;
  std::string message;
};

struct CatalogLoad {
  ItemCatalog catalog;
  std::size_t dropped_missing_title = 0;
  std::size_t duplicate_ids = 0;
  std::vector<LoadWarning> warnings;
};

/// Reads one JSON object per line. Records without a non-empty Title are
/// counted and skipped. Throws IoError when unreadable and
/// EmptyDatasetError when no record survives.
CatalogLoad load_catalog(const std::filesystem::path& path, const FieldMap& field_map);

struct Event {
  std::string item_id;
  std::int64_t timestamp = 0;

  bool operator==(const Event&) const = default;
};

struct UserSequence {
  std::string user_id;
  std::vector<Event> events;  // ascending timestamp, stable on ties

  bool operator==(const UserSequence&) const = default;
};

struct SequenceBuild {
  std::vector<UserSequence> sequences;  // sorted by user_id
  std::size_t dropped_unknown_items = 0;
  std::size_t dropped_short_users = 0;
  std::vector<LoadWarning> warnings;
};

/// Groups interactions per user, joins against the catalog, sorts each
/// user's events by timestamp and drops users with fewer than min_len
/// surviving events.
SequenceBuild build_sequences(const std::filesystem::path& path,
                              const ItemCatalog& catalog,
                              const FieldMap& field_map, std::size_t min_len = 3);

/// Same as above over already-decoded rows (user, item, timestamp), in
/// source order.
struct InteractionRow {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;
};
SequenceBuild build_sequences(const std::vector<InteractionRow>& rows,
                              const ItemCatalog& catalog, std::size_t min_len = 3);

struct PoolInstance {
  std::string user_id;
  std::vector<std::string> history;     // chronological
  std::vector<std::string> candidates;  // shuffled, distinct
  std::size_t target_index = 0;

  const std::string& target() const { return candidates.at(target_index); }
  bool operator==(const PoolInstance&) const = default;
};

struct UserSplit {
  std::string user_id;
  std::vector<std::string> train;  // chronological prefix
  std::string validation_target;
  std::string test_target;

  bool operator==(const UserSplit&) const = default;
};

struct DatasetSplit {
  std::vector<UserSplit> users;
  std::vector<PoolInstance> pool_instances;  // one per user, same order

  bool operator==(const DatasetSplit&) const = default;
};

struct SplitOptions {
  /// Sampled negatives per pool; the pool holds pool_size + 1 candidates.
  std::size_t pool_size = 20;
  std::size_t history_len = 5;
  std::uint64_t seed = 0;
};

/// Leave-one-out split: last event is the test target, second-to-last the
/// validation target. Each user also gets one candidate-pool instance for
/// the test target. Throws ConfigError when the catalog is too small to
/// fill a pool.
DatasetSplit split_leave_one_out(const std::vector<UserSequence>& sequences,
                                 const ItemCatalog& catalog, const SplitOptions& options);

/// One JSON object per line: per-user split then pool instance.
void write_split(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit read_split(const std::filesystem::path& path);

}  // namespace lamar::corpus
