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

#include "doctest.h"
#include "lamar/enrichment.hpp"
#include "lamar/errors.hpp"
#include "lamar/io.hpp"
#include "lamar/random.hpp"
#include "lamar/text.hpp"
#include "temp_dir.hpp"

using namespace lamar;
using namespace lamar::enrichment;

namespace {

ItemRecord hikari() {
  return {"B0002",
          {{kTitle, "Hikari Usa Inc AHK01389 Staple 22lb, Medium"},
           {kBrand, "Hikari Usa Inc."},
           {kCategory, "Pet Supplies Fish & Aquatic Pets Food"}}};
}

SemanticSignal sig(const std::string& item, const std::string& name, const std::string& text) {
  return {item, name, text, "gpt", "h", 0};
}

std::string random_words(Rng& rng, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += rng.uniform_index(4) == 0 ? "  " : " ";
    const auto len = 1 + rng.uniform_index(6);
    for (std::uint64_t k = 0; k < len; ++k) out.push_back(static_cast<char>('a' + rng.uniform_index(26)));
  }
  return out;
}

ItemRecord random_item(Rng& rng, const std::string& id) {
  ItemRecord r{id, {}};
  std::vector<std::string> names = {kTitle, kBrand, kCategory, "Color", "Size"};
  rng.shuffle(std::span<std::string>(names));
  const auto n = 1 + rng.uniform_index(names.size());
  bool has_title = false;
  for (std::uint64_t i = 0; i < n; ++i) {
    r.attributes.push_back({names[i], random_words(rng, 1 + rng.uniform_index(40))});
    has_title = has_title || names[i] == kTitle;
  }
  if (!has_title) r.attributes.push_back({kTitle, random_words(rng, 1 + rng.uniform_index(10))});
  return r;
}

std::vector<Attribute> base_pairs(const AttributeText& t, const ItemRecord& base) {
  std::vector<Attribute> out;
  for (const auto& p : t.pairs)
    if (base.find(p.name) != nullptr) out.push_back(p);
  return out;
}

}  // namespace

TEST_CASE("augment_item") {
  const auto base = hikari();
  const auto one = augment_item(base, {sig("B0002", "Pet's Specific Need", "Staple food for fish.")});
  CHECK(one.base == base);
  CHECK(one.base.attributes.size() + one.signals.size() == 4);
  CHECK(augment_item(base, {}) == EnrichedItem{base, {}});

  const auto two = augment_item(base, {sig("B0002", "Pet's Specific Need", "x"),
                                       sig("B0002", "Care Level", "y")});
  REQUIRE(two.signals.size() == 2);
  CHECK(two.signals[0].signal_name == "Pet's Specific Need");
  CHECK(two.signals[1].signal_name == "Care Level");

  CHECK_THROWS_AS(augment_item(base, {sig("OTHER", "n", "x")}), MismatchError);
  CHECK_THROWS_AS(augment_item(base, {sig("B0002", "n", "x"), sig("B0002", "n", "y")}),
                  PreconditionError);
}

TEST_CASE("flatten_item ordering and limits") {
  ItemRecord r{"x", {{kCategory, "Pets"}, {"Color", "blue"}, {kTitle, "Fish Food"}, {kBrand, "Hikari"}}};
  const auto e = augment_item(r, {sig("x", "Need", "daily feeding")});
  const auto t = flatten_item(e, {8, 256});
  REQUIRE(t.pairs.size() == 5);
  CHECK(t.pairs[0].name == kTitle);
  CHECK(t.pairs[1].name == kBrand);
  CHECK(t.pairs[2].name == kCategory);
  CHECK(t.pairs[3].name == "Color");
  CHECK(t.pairs[4].name == "Need");
  CHECK(t.token_count == 7);

  CHECK(flatten_item(e, {4, 256}).pairs.size() == 4);
  CHECK_THROWS_AS(flatten_item(e, {0, 256}), PreconditionError);
  CHECK_THROWS_AS(flatten_item(e, {4, 0}), PreconditionError);
}

TEST_CASE("flatten_item with the default limits keeps all four sources") {
  const auto e = augment_item(hikari(), {sig("B0002", "Pet's Specific Need",
                                             "A balanced and nutritious staple food.")});
  const auto t = flatten_item(e);
  CHECK(t.pairs.size() == 4);
  CHECK(t.pairs[3].value == "A balanced and nutritious staple food.");
}

TEST_CASE("word budget truncation") {
  ItemRecord r{"x", {{kTitle, "one two three"}, {kBrand, "b1 b2"}, {kCategory, "c1 c2 c3"}}};
  auto t = flatten_item({r, {}}, {4, 3});
  REQUIRE(t.pairs.size() == 1);
  CHECK(t.pairs[0].name == kTitle);
  CHECK(t.token_count == 3);

  // The overflowing pair is cut to the residual budget; later pairs go.
  t = flatten_item({r, {}}, {4, 4});
  REQUIRE(t.pairs.size() == 2);
  CHECK(t.pairs[1].value == "b1");
  CHECK(t.token_count == 4);

  t = flatten_item({r, {}}, {4, 2});
  REQUIRE(t.pairs.size() == 1);
  CHECK(t.pairs[0].value == "one two");
}

TEST_CASE("a fifth source is dropped at max_attr_num 4") {
  ItemRecord r{"x", {{kTitle, "t"}, {kBrand, "b"}, {kCategory, "c"}}};
  const auto e = augment_item(r, {sig("x", "S1", "s one"), sig("x", "S2", "s two")});
  const auto t = flatten_item(e, {4, 256});
  REQUIRE(t.pairs.size() == 4);
  CHECK(t.pairs.back().name == "S1");
}

TEST_CASE("enrich_sequence with a store") {
  testing::TempDir tmp;
  corpus::ItemCatalog cat;
  for (const char* id : {"a", "b", "c"}) cat.insert({id, {{kTitle, std::string("Item ") + id}}});
  llm::SignalStore store(tmp / "s.jsonl");
  store.append({"a", "Use", "text a", "gpt", "h", 0});
  store.append({"b", "Use", "text b", "gpt", "h", 0});
  corpus::UserSequence seq{"u", {{"a", 1}, {"b", 2}, {"c", 3}}};

  Coverage cov;
  const auto e = enrich_sequence(seq, cat, &store, {"Use"}, "gpt", &cov);
  REQUIRE(e.items.size() == 3);
  CHECK(e.items[0].signals.size() == 1);
  CHECK(e.items[2].signals.empty());
  CHECK(cov.found == 2);
  CHECK(cov.requested == 3);
  CHECK(cov.ratio() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  store.append({"c", "Use", "text c", "gpt", "h", 0});
  Coverage full;
  const auto f = enrich_sequence(seq, cat, &store, {"Use"}, "gpt", &full);
  for (const auto& it : f.items) CHECK(it.signals.size() == 1);
  CHECK(full.ratio() == 1.0);

  const auto none = enrich_sequence(seq, cat, &store, {}, "gpt");
  for (std::size_t i = 0; i < 3; ++i) CHECK(none.items[i] == EnrichedItem{cat.at(seq.events[i].item_id), {}});

  // Another model's signals are not used.
  CHECK(enrich_sequence(seq, cat, &store, {"Use"}, "gemini").items[0].signals.empty());
}

TEST_CASE("enrich_sequence keeps the most recent items") {
  corpus::ItemCatalog cat;
  corpus::UserSequence seq{"u", {}};
  for (int i = 0; i < 60; ++i) {
    const auto id = "i" + std::to_string(i);
    cat.insert({id, {{kTitle, id}}});
    seq.events.push_back({id, i});
  }
  const auto e = enrich_sequence(seq, cat, nullptr, {}, "m");
  REQUIRE(e.items.size() == 50);
  CHECK(e.items.front().base.item_id == "i10");
  CHECK(e.items.back().base.item_id == "i59");
}

TEST_CASE("item texts round trip") {
  testing::TempDir tmp;
  corpus::ItemCatalog cat;
  cat.insert(hikari());
  cat.insert({"z", {{kTitle, "Zed"}}});
  const auto texts = flatten_catalog(cat, nullptr, {}, "m", {});
  write_item_texts(tmp / "items.jsonl", texts);
  CHECK(read_item_texts(tmp / "items.jsonl") == texts);
}

TEST_CASE("property: budget, superset and identity laws over random items") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto base = random_item(rng, "x");
    std::vector<SemanticSignal> sigs;
    const auto n_sig = rng.uniform_index(3);
    for (std::uint64_t s = 0; s < n_sig; ++s)
      sigs.push_back(sig("x", "Signal " + std::to_string(s), random_words(rng, 1 + rng.uniform_index(60))));
    const FlattenLimits lim{1 + static_cast<std::size_t>(rng.uniform_index(6)),
                            1 + static_cast<std::size_t>(rng.uniform_index(120))};

    const auto aug = augment_item(base, sigs);
    CHECK(aug.base == base);
    CHECK(augment_item(base, {}) == EnrichedItem{base, {}});

    const auto with = flatten_item(aug, lim);
    const auto without = flatten_item({base, {}}, lim);
    // Budget law.
    CHECK(with.pairs.size() <= lim.max_attr_num);
    CHECK(with.token_count <= lim.max_token_num);
    std::size_t counted = 0;
    for (const auto& p : with.pairs) counted += text::count_words(p.value);
    CHECK(counted == with.token_count);
    // Superset law: base pairs are untouched by enrichment.
    CHECK(base_pairs(with, base) == without.pairs);
    // Title always leads.
    REQUIRE_FALSE(with.pairs.empty());
    CHECK(with.pairs[0].name == kTitle);
  }
}

TEST_CASE("property: enriched sequences preserve order") {
  Rng rng(99);
  corpus::ItemCatalog cat;
  for (int i = 0; i < 30; ++i) cat.insert(random_item(rng, "i" + std::to_string(i)));
  for (int trial = 0; trial < 1000; ++trial) {
    corpus::UserSequence seq{"u", {}};
    const auto len = 1 + rng.uniform_index(70);
    for (std::uint64_t k = 0; k < len; ++k)
      seq.events.push_back({"i" + std::to_string(rng.uniform_index(30)), static_cast<std::int64_t>(k)});
    const auto e = enrich_sequence(seq, cat, nullptr, {"S"}, "m");
    const std::size_t kept = std::min<std::size_t>(len, 50);
    REQUIRE(e.items.size() == kept);
    const std::size_t offset = len - kept;
    for (std::size_t k = 0; k < kept; ++k)
      CHECK(e.items[k].base.item_id == seq.events[offset + k].item_id);
  }
}
