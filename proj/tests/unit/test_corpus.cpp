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

#include <algorithm>
#include <set>

#include "doctest.h"
#include "lamar/corpus.hpp"
#include "lamar/errors.hpp"
#include "lamar/io.hpp"
#include "lamar/random.hpp"
#include "temp_dir.hpp"

using namespace lamar;
using namespace lamar::corpus;

namespace {

FieldMap asin_map() {
  FieldMap m;
  m.item_fields = {{"asin", "item_id"}, {"title", kTitle}, {"brand", kBrand}, {"category", kCategory}};
  return m;
}

ItemCatalog letters_catalog(std::size_t n) {
  ItemCatalog c;
  for (std::size_t i = 0; i < n; ++i) {
    c.insert({"i" + std::to_string(100 + i), {{kTitle, "Item " + std::to_string(i)}}});
  }
  return c;
}

}  // namespace

TEST_CASE("load_catalog maps fields and keeps the title verbatim") {
  testing::TempDir tmp;
  const auto p = tmp.write(
      "items.jsonl",
      R"({"asin":"B01","title":"Arctic Silver 5 AS5-3.5G Thermal Paste","brand":"Arctic Silver","category":"Industrial & Scientific"})"
      "\n");
  const auto load = load_catalog(p, asin_map());
  REQUIRE(load.catalog.size() == 1);
  const auto& item = load.catalog.at("B01");
  REQUIRE(item.find(kTitle) != nullptr);
  CHECK(*item.find(kTitle) == "Arctic Silver 5 AS5-3.5G Thermal Paste");
  CHECK(*item.find(kBrand) == "Arctic Silver");
}

TEST_CASE("load_catalog drops missing titles and warns on bad lines") {
  testing::TempDir tmp;
  const auto p = tmp.write("items.jsonl",
                           R"({"asin":"A","title":"  First  "})"
                           "\n"
                           R"({"asin":"B","title":""})"
                           "\n"
                           "not json\n"
                           R"({"asin":"C","title":"Third","brand":["x","y"],"price":12})"
                           "\n");
  FieldMap m = asin_map();
  m.item_fields.emplace_back("price", "Price");
  const auto load = load_catalog(p, m);
  CHECK(load.catalog.size() == 2);
  CHECK(load.dropped_missing_title == 1);
  REQUIRE(load.warnings.size() == 1);
  CHECK(load.warnings[0].line == 3);
  CHECK(*load.catalog.at("A").find(kTitle) == "First");
  CHECK(*load.catalog.at("C").find(kBrand) == "x y");
  CHECK(*load.catalog.at("C").find("Price") == "12");
}

TEST_CASE("three-line fixture with one missing title gives two items") {
  testing::TempDir tmp;
  const auto p = tmp.write("items.jsonl",
                           R"({"asin":"1","title":"a"})"
                           "\n"
                           R"({"asin":"2"})"
                           "\n"
                           R"({"asin":"3","title":"c"})"
                           "\n");
  const auto load = load_catalog(p, asin_map());
  CHECK(load.catalog.size() == 2);
  CHECK(load.dropped_missing_title == 1);
  CHECK(load_catalog(p, asin_map()).catalog == load.catalog);
}

TEST_CASE("load_catalog errors") {
  testing::TempDir tmp;
  CHECK_THROWS_AS(load_catalog(tmp / "nope.jsonl", asin_map()), IoError);
  const auto p = tmp.write("items.jsonl", R"({"asin":"1","title":""})"
                                          "\n");
  CHECK_THROWS_AS(load_catalog(p, asin_map()), EmptyDatasetError);
}

TEST_CASE("duplicate ids keep the first record") {
  testing::TempDir tmp;
  const auto p = tmp.write("items.jsonl", R"({"asin":"1","title":"first"})"
                                          "\n"
                                          R"({"asin":"1","title":"second"})"
                                          "\n");
  const auto load = load_catalog(p, asin_map());
  CHECK(load.duplicate_ids == 1);
  CHECK(*load.catalog.at("1").find(kTitle) == "first");
}

TEST_CASE("build_sequences sorts by timestamp") {
  ItemCatalog c;
  for (const char* id : {"a", "b", "c"}) c.insert({id, {{kTitle, id}}});
  const auto r = build_sequences({{"u1", "a", 30}, {"u1", "b", 10}, {"u1", "c", 20}}, c);
  REQUIRE(r.sequences.size() == 1);
  const auto& ev = r.sequences[0].events;
  CHECK(ev[0].item_id == "b");
  CHECK(ev[1].item_id == "c");
  CHECK(ev[2].item_id == "a");
}

TEST_CASE("build_sequences keeps input order on timestamp ties") {
  ItemCatalog c;
  for (const char* id : {"a", "b", "c"}) c.insert({id, {{kTitle, id}}});
  const auto r = build_sequences({{"u", "c", 5}, {"u", "a", 5}, {"u", "b", 1}}, c);
  const auto& ev = r.sequences.at(0).events;
  CHECK(ev[0].item_id == "b");
  CHECK(ev[1].item_id == "c");
  CHECK(ev[2].item_id == "a");
}

TEST_CASE("unknown items are dropped before the length check") {
  ItemCatalog c;
  for (const char* id : {"a", "b", "c"}) c.insert({id, {{kTitle, id}}});
  const auto r = build_sequences(
      {{"u1", "a", 1}, {"u1", "zz", 2}, {"u1", "b", 3}, {"u2", "a", 1}, {"u2", "b", 2}, {"u2", "c", 3}},
      c);
  CHECK(r.dropped_unknown_items == 1);
  CHECK(r.dropped_short_users == 1);
  REQUIRE(r.sequences.size() == 1);
  CHECK(r.sequences[0].user_id == "u2");
}

TEST_CASE("build_sequences preconditions") {
  ItemCatalog c;
  c.insert({"a", {{kTitle, "a"}}});
  CHECK_THROWS_AS(build_sequences({{"u", "a", 1}}, c, 2), PreconditionError);
  CHECK_THROWS_AS(build_sequences({{"u", "a", 1}}, c, 3), EmptyDatasetError);
}

TEST_CASE("build_sequences reads interaction files through the field map") {
  testing::TempDir tmp;
  ItemCatalog c;
  for (const char* id : {"a", "b", "c"}) c.insert({id, {{kTitle, id}}});
  const auto p = tmp.write("inter.jsonl",
                           R"({"reviewer":"u","asin":"a","unixReviewTime":3})"
                           "\n"
                           R"({"reviewer":"u","asin":"b","unixReviewTime":1})"
                           "\n"
                           R"({"reviewer":"u","asin":"c","unixReviewTime":2})"
                           "\n");
  FieldMap m;
  m.user_field = "reviewer";
  m.item_field = "asin";
  m.timestamp_field = "unixReviewTime";
  const auto r = build_sequences(p, c, m);
  REQUIRE(r.sequences.size() == 1);
  CHECK(r.sequences[0].events.front().item_id == "b");
}

TEST_CASE("leave-one-out split") {
  const auto cat = letters_catalog(40);
  UserSequence s{"u", {{"i100", 1}, {"i101", 2}, {"i102", 3}, {"i103", 4}}};
  const auto split = split_leave_one_out({s}, cat, {20, 5, 9});
  REQUIRE(split.users.size() == 1);
  const auto& u = split.users[0];
  CHECK(u.train == std::vector<std::string>{"i100", "i101"});
  CHECK(u.validation_target == "i102");
  CHECK(u.test_target == "i103");

  const auto& pool = split.pool_instances.at(0);
  CHECK(pool.candidates.size() == 21);
  CHECK(pool.target() == "i103");
  CHECK(pool.history == std::vector<std::string>{"i100", "i101", "i102"});
  for (const auto& h : pool.history)
    CHECK(std::find(pool.candidates.begin(), pool.candidates.end(), h) == pool.candidates.end());
}

TEST_CASE("pool history keeps the last history_len events") {
  const auto cat = letters_catalog(40);
  UserSequence s;
  s.user_id = "u";
  for (int i = 0; i < 9; ++i) s.events.push_back({"i1" + std::to_string(10 + i), i});
  const auto split = split_leave_one_out({s}, cat, {20, 5, 1});
  const auto& h = split.pool_instances[0].history;
  CHECK(h == std::vector<std::string>{"i113", "i114", "i115", "i116", "i117"});
}

TEST_CASE("split is deterministic and seed-sensitive") {
  const auto cat = letters_catalog(60);
  std::vector<UserSequence> seqs;
  for (int u = 0; u < 20; ++u) {
    UserSequence s{"u" + std::to_string(u), {}};
    for (int i = 0; i < 5; ++i) s.events.push_back({"i1" + std::to_string(10 + (u + i) % 40), i});
    seqs.push_back(s);
  }
  testing::TempDir tmp;
  const auto a = split_leave_one_out(seqs, cat, {20, 5, 11});
  const auto b = split_leave_one_out(seqs, cat, {20, 5, 11});
  const auto c = split_leave_one_out(seqs, cat, {20, 5, 12});
  write_split(tmp / "a.jsonl", a);
  write_split(tmp / "b.jsonl", b);
  CHECK(io::read_file(tmp / "a.jsonl") == io::read_file(tmp / "b.jsonl"));
  CHECK_FALSE(a == c);
  CHECK(read_split(tmp / "a.jsonl") == a);
}

TEST_CASE("split rejects a catalog too small for a pool") {
  const auto cat = letters_catalog(25);
  UserSequence s{"u", {{"i100", 1}, {"i101", 2}, {"i102", 3}}};
  CHECK_THROWS_AS(split_leave_one_out({s}, cat, {20, 5, 0}), ConfigError);
  CHECK_NOTHROW(split_leave_one_out({s}, letters_catalog(26), {20, 5, 0}));
}

TEST_CASE("split conserves every user's events") {
  const auto cat = letters_catalog(80);
  Rng rng(21);
  std::vector<UserSequence> seqs;
  for (int u = 0; u < 200; ++u) {
    UserSequence s{"u" + std::to_string(u), {}};
    const auto len = 3 + rng.uniform_index(10);
    for (std::uint64_t i = 0; i < len; ++i)
      s.events.push_back({"i" + std::to_string(100 + rng.uniform_index(80)), static_cast<std::int64_t>(i)});
    seqs.push_back(s);
  }
  const auto split = split_leave_one_out(seqs, cat, {20, 5, 4});
  REQUIRE(split.users.size() == seqs.size());
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    std::multiset<std::string> orig, rebuilt;
    for (const auto& e : seqs[u].events) orig.insert(e.item_id);
    const auto& us = split.users[u];
    rebuilt.insert(us.train.begin(), us.train.end());
    rebuilt.insert(us.validation_target);
    rebuilt.insert(us.test_target);
    CHECK(orig == rebuilt);
    CHECK(us.train.size() + 2 == seqs[u].events.size());
    const auto& pool = split.pool_instances[u];
    CHECK(std::count(pool.candidates.begin(), pool.candidates.end(), us.test_target) == 1);
  }
}
