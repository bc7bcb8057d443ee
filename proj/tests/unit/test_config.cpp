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

#include "doctest.h"
#include "lamar/config.hpp"
#include "lamar/errors.hpp"
#include "temp_dir.hpp"

using namespace lamar;
using nlohmann::json;

namespace {

json sample() {
  return json::parse(R"({
    "seed": 7,
    "paths": {"items": "items.jsonl", "interactions": "/abs/inter.jsonl",
              "signal_store": "s.jsonl", "output_dir": "run"},
    "field_map": {"items": [["asin", "item_id"], ["title", "Title"]],
                  "interactions": {"user": "reviewerID", "item": "asin", "timestamp": "unixReviewTime"}},
    "backend": {"kind": "deterministic_mock", "model_id": "m1"},
    "quality_filter": {"max_attempts": 2},
    "prompting": {"domain": "Toys", "shot_count": 1,
                  "shots": [{"item_attributes": "Title: x", "signal_text": "for kids"}]},
    "signal_names": ["Primary Use Case"],
    "model": {"embed_dim": 16, "epochs": 2},
    "evaluation": {"protocol": "pool", "ks": [5]},
    "diversity": {"thresholds": [0.5, 0.8], "strict": false}
  })");
}

}  // namespace

TEST_CASE("parse and relative path resolution") {
  const auto c = RunConfig::from_json(sample(), "/base/dir");
  CHECK(c.seed == 7);
  CHECK(c.model.seed == 7);
  CHECK(c.paths.items == "/base/dir/items.jsonl");
  CHECK(c.paths.interactions == "/abs/inter.jsonl");
  CHECK(c.paths.output_dir == "/base/dir/run");
  CHECK(c.corpus.field_map.item_fields.size() == 2);
  CHECK(c.corpus.field_map.user_field == "reviewerID");
  CHECK(c.max_filter_attempts == 2);
  CHECK(c.prompting.shots.size() == 1);
  CHECK(c.model.embed_dim == 16);
  CHECK(c.evaluation.protocol == eval::Protocol::kPool);
  CHECK(c.diversity.strict == false);
}

TEST_CASE("defaults") {
  const auto c = RunConfig::from_json(json::object());
  CHECK(c.paths.output_dir == "out");
  CHECK(c.corpus.min_len == 3);
  CHECK(c.corpus.pool_size == 20);
  CHECK(c.max_filter_attempts == 3);
  CHECK(c.evaluation.ks == std::vector<std::size_t>{10, 50});
  CHECK(c.diversity.thresholds == diversity::kDefaultThresholds);
}

TEST_CASE("object form of the item field map") {
  auto j = sample();
  j["field_map"]["items"] = json{{"asin", "item_id"}, {"title", "Title"}};
  const auto c = RunConfig::from_json(j);
  CHECK(c.corpus.field_map == RunConfig::from_json(sample()).corpus.field_map);
}

TEST_CASE("serialization round trip") {
  const auto c = RunConfig::from_json(sample(), "/base/dir");
  CHECK(RunConfig::from_json(c.to_json()) == c);
  CHECK(RunConfig::from_json(RunConfig{}.to_json()) == RunConfig{});
}

TEST_CASE("invalid values") {
  const auto bad = [](const char* pointer, json value) {
    auto j = sample();
    j[json::json_pointer(pointer)] = std::move(value);
    return j;
  };
  CHECK_THROWS_AS(RunConfig::from_json(bad("/corpus/min_len", 2)), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/evaluation/ks", json::array())), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/evaluation/ks", {0})), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/evaluation/protocol", "top_k")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/diversity/thresholds", {0.9, 0.6})), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/backend/kind", "carrier_pigeon")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/backend/model_id", "")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/backend/kind", "http_chat")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/signal_names", {"a", "a"})), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/model/embed_dim", "sixteen")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(bad("/quality_filter/max_attempts", 0)), ConfigError);
}

TEST_CASE("load from disk") {
  lamar::testing::TempDir dir;
  dir.write("run.json", sample().dump());
  const auto c = RunConfig::load(dir / "run.json");
  CHECK(c.paths.items == (dir.path() / "items.jsonl").lexically_normal());
  dir.write("broken.json", "{not json");
  CHECK_THROWS_AS(RunConfig::load(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(RunConfig::load(dir / "absent.json"), ConfigError);
}

TEST_CASE("shipped synthetic config loads") {
  const auto c = RunConfig::load(std::filesystem::path(LAMAR_SOURCE_DIR) / "data/synthetic/config.json");
  CHECK(c.signal_names == std::vector<std::string>{"Primary Use Case"});
  CHECK(c.backend.kind == llm::BackendKind::kDeterministicMock);
}
