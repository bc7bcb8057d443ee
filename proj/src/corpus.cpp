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

#include "lamar/corpus.hpp"

#include <algorithm>
#include "json.hpp"
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lamar/errors.hpp"
#include "lamar/io.hpp"
#include "lamar/random.hpp"
#include "lamar/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lamar::corpus {
namespace {

// Flattens a JSON field into one attribute string. Nested category lists
// are joined with spaces.
void append_value(const json& v, std::string& out) {
  auto add = [&out](std::string_view piece) {
    const std::string t = text::trim(piece);
    if (t.empty()) return;
    if (!out.empty()) out.push_back(' ');
    out += t;
  };
  if (v.is_string()) {
    add(v.get_ref<const std::string&>());
  } else if (v.is_array()) {
    for (const auto& e : v) append_value(e, out);
  } else if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float() ||
             v.is_boolean()) {
    add(v.dump());
  } else if (v.is_object()) {
    add(v.dump());
  }
}

std::string field_string(const json& v) {
  std::string out;
  append_value(v, out);
  return out;
}

std::int64_t parse_timestamp(const json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_unsigned()) return static_cast<std::int64_t>(v.get<std::uint64_t>());
  if (v.is_number_float()) return static_cast<std::int64_t>(v.get<double>());
  if (v.is_string()) {
    const std::string s = text::trim(v.get_ref<const std::string&>());
    std::size_t used = 0;
    const long long t = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return t;
  }
  throw std::invalid_argument("timestamp is not a number");
}

}  // namespace

bool ItemCatalog::insert(ItemRecord record) {
  auto id = record.item_id;
  return items_.emplace(std::move(id), std::move(record)).second;
}

const ItemRecord* ItemCatalog::find(const std::string& item_id) const {
  auto it = items_.find(item_id);
  return it == items_.end() ? nullptr : &it->second;
}

const ItemRecord& ItemCatalog::at(const std::string& item_id) const {
  const ItemRecord* r = find(item_id);
  if (r == nullptr) throw PreconditionError("unknown item id '" + item_id + "'");
  return *r;
}

std::vector<std::string> ItemCatalog::ids() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& [id, _] : items_) out.push_back(id);
  return out;
}

CatalogLoad load_catalog(const fs::path& path, const FieldMap& field_map) {
  CatalogLoad result;
  io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (text::trim(line).empty()) return;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      result.warnings.push_back({line_no, std::string("undecodable line: ") + e.what()});
      return;
    }
    if (!obj.is_object()) {
      result.warnings.push_back({line_no, "line is not a flat record"});
      return;
    }
    ItemRecord record;
    std::set<std::string> seen_names;
    for (const auto& [source, canonical] : field_map.item_fields) {
      auto it = obj.find(source);
      if (it == obj.end() || it->is_null()) continue;
      std::string value = field_string(*it);
      if (canonical == "item_id") {
        record.item_id = std::move(value);
        continue;
      }
      if (value.empty() || !seen_names.insert(canonical).second) continue;
      record.attributes.push_back({canonical, std::move(value)});
    }
    if (record.item_id.empty()) {
      result.warnings.push_back({line_no, "record has no item id"});
      return;
    }
    const std::string* title = record.find(kTitle);
    if (title == nullptr || title->empty()) {
      ++result.dropped_missing_title;
      return;
    }
    if (!result.catalog.insert(std::move(record))) {
      ++result.duplicate_ids;
      result.warnings.push_back({line_no, "duplicate item id; keeping first"});
    }
  });
  if (result.catalog.empty()) {
    throw EmptyDatasetError("catalog '" + path.string() + "' has no valid items");
  }
  return result;
}

SequenceBuild build_sequences(const std::vector<InteractionRow>& rows,
                              const ItemCatalog& catalog, std::size_t min_len) {
  if (min_len < 3) {
    throw PreconditionError("min_len must be at least 3 for a leave-one-out split");
  }
  SequenceBuild result;
  std::map<std::string, std::vector<Event>> by_user;
  for (const auto& row : rows) {
    if (!catalog.contains(row.item_id)) {
      ++result.dropped_unknown_items;
      continue;
    }
    by_user[row.user_id].push_back({row.item_id, row.timestamp});
  }
  for (auto& [user, events] : by_user) {
    if (events.size() < min_len) {
      ++result.dropped_short_users;
      continue;
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      return a.timestamp < b.timestamp;
    });
    result.sequences.push_back({user, std::move(events)});
  }
  if (result.sequences.empty()) {
    throw EmptyDatasetError("no user has at least " + std::to_string(min_len) +
                            " interactions with known items");
  }
  return result;
}

SequenceBuild build_sequences(const fs::path& path, const ItemCatalog& catalog,
                              const FieldMap& field_map, std::size_t min_len) {
  std::vector<InteractionRow> rows;
  std::vector<LoadWarning> warnings;
  io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      const json obj = json::parse(line);
      InteractionRow row;
      row.user_id = field_string(obj.at(field_map.user_field));
      row.item_id = field_string(obj.at(field_map.item_field));
      row.timestamp = parse_timestamp(obj.at(field_map.timestamp_field));
      if (row.user_id.empty() || row.item_id.empty()) {
        warnings.push_back({line_no, "empty user or item id"});
        return;
      }
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      warnings.push_back({line_no, std::string("undecodable interaction: ") + e.what()});
    }
  });
  SequenceBuild result = build_sequences(rows, catalog, min_len);
  result.warnings = std::move(warnings);
  return result;
}

DatasetSplit split_leave_one_out(const std::vector<UserSequence>& sequences,
                                 const ItemCatalog& catalog, const SplitOptions& options) {
  if (options.history_len == 0) throw ConfigError("history_len must be positive");
  if (catalog.size() < options.pool_size + options.history_len + 1) {
    throw ConfigError("catalog of " + std::to_string(catalog.size()) +
                      " items cannot fill a pool of " + std::to_string(options.pool_size) +
                      " negatives with history " + std::to_string(options.history_len));
  }
  const std::vector<std::string> ids = catalog.ids();
  DatasetSplit split;
  split.users.reserve(sequences.size());
  split.pool_instances.reserve(sequences.size());
  for (std::size_t u = 0; u < sequences.size(); ++u) {
    const auto& seq = sequences[u];
    const std::size_t n = seq.events.size();
    if (n < 3) {
      throw PreconditionError("user '" + seq.user_id + "' has fewer than 3 events");
    }
    UserSplit us;
    us.user_id = seq.user_id;
    for (std::size_t i = 0; i + 2 < n; ++i) us.train.push_back(seq.events[i].item_id);
    us.validation_target = seq.events[n - 2].item_id;
    us.test_target = seq.events[n - 1].item_id;

    PoolInstance pool;
    pool.user_id = seq.user_id;
    const std::size_t hist_begin = (n - 1) > options.history_len ? n - 1 - options.history_len : 0;
    for (std::size_t i = hist_begin; i + 1 < n; ++i) pool.history.push_back(seq.events[i].item_id);

    std::unordered_set<std::string> excluded(pool.history.begin(), pool.history.end());
    excluded.insert(us.test_target);
    Rng rng = Rng::derive(options.seed, u);
    std::unordered_set<std::size_t> picked;
    std::vector<std::string> candidates;
    candidates.reserve(options.pool_size + 1);
    while (candidates.size() < options.pool_size) {
      const auto idx = static_cast<std::size_t>(rng.uniform_index(ids.size()));
      if (excluded.count(ids[idx]) > 0 || !picked.insert(idx).second) continue;
      candidates.push_back(ids[idx]);
    }
    candidates.push_back(us.test_target);
    rng.shuffle(std::span<std::string>(candidates));
    pool.target_index = static_cast<std::size_t>(
        std::find(candidates.begin(), candidates.end(), us.test_target) - candidates.begin());
    pool.candidates = std::move(candidates);

    split.users.push_back(std::move(us));
    split.pool_instances.push_back(std::move(pool));
  }
  return split;
}

void write_split(const fs::path& path, const DatasetSplit& split) {
  std::ostringstream out;
  for (std::size_t i = 0; i < split.users.size(); ++i) {
    const auto& u = split.users[i];
    json line = {{"user_id", u.user_id},
                 {"train", u.train},
                 {"validation_target", u.validation_target},
                 {"test_target", u.test_target}};
    if (i < split.pool_instances.size()) {
      const auto& p = split.pool_instances[i];
      line["pool"] = {{"history", p.history},
                      {"candidates", p.candidates},
                      {"target_index", p.target_index}};
    }
    out << line.dump() << '\n';
  }
  io::write_file_atomic(path, out.str());
}

DatasetSplit read_split(const fs::path& path) {
  DatasetSplit split;
  io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      const json obj = json::parse(line);
      UserSplit u;
      u.user_id = obj.at("user_id").get<std::string>();
      u.train = obj.at("train").get<std::vector<std::string>>();
      u.validation_target = obj.at("validation_target").get<std::string>();
      u.test_target = obj.at("test_target").get<std::string>();
      if (auto it = obj.find("pool"); it != obj.end()) {
        PoolInstance p;
        p.user_id = u.user_id;
        p.history = it->at("history").get<std::vector<std::string>>();
        p.candidates = it->at("candidates").get<std::vector<std::string>>();
        p.target_index = it->at("target_index").get<std::size_t>();
        split.pool_instances.push_back(std::move(p));
      }
      split.users.push_back(std::move(u));
    } catch (const std::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return split;
}

}  // namespace lamar::corpus
