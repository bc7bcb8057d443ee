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

#include "lamar/synthetic.hpp"

#include <set>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "lamar/errors.hpp"
#include "lamar/io.hpp"
#include "lamar/random.hpp"

namespace lamar::synthetic {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kThemes[] = {
    "aquarium", "birdwatching", "calligraphy", "drumming",   "embroidery",
    "fishing",  "gardening",    "hiking",      "knitting",   "origami",
    "pottery",  "quilting",     "rowing",      "sailing",    "skating",
    "stargazing", "surfing",    "woodworking", "yoga",       "cycling",
    "archery",  "beekeeping",   "camping",     "fencing",    "juggling"};

constexpr const char* kSyllables[] = {"ka", "zor", "vel", "mi",  "tru", "pha", "lon", "dex",
                                      "qui", "ra", "sto", "ny",  "bel", "gor", "fin", "wex",
                                      "ul", "tam", "cro", "vi",  "sel", "dro", "mak", "pon"};

constexpr const char* kBrands[] = {"Acmeon",  "Borelli", "Castor",  "Dunmore", "Eldwick",
                                   "Fenwick", "Galloway", "Harlow", "Ivers",   "Jarrow",
                                   "Kestrel", "Lindqvist"};

constexpr const char* kSubcategories[] = {"Accessories", "Supplies", "Tools", "Kits",
                                          "Equipment",   "Essentials", "Gear", "Sets"};

std::string pseudo_word(Rng& rng) {
  std::string w;
  const std::size_t n = 2 + rng.uniform_index(2);
  for (std::size_t i = 0; i < n; ++i) w += kSyllables[rng.uniform_index(std::size(kSyllables))];
  w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

}  // namespace

Files write_corpus(const fs::path& dir, const Options& o) {
  if (o.n_themes == 0 || o.n_themes > std::size(kThemes)) {
    throw ConfigError("n_themes must be in [1, " + std::to_string(std::size(kThemes)) + "]");
  }
  const std::size_t per_theme = o.n_items / o.n_themes;
  if (per_theme * o.n_themes != o.n_items || per_theme <= o.cold_per_theme ||
      per_theme - o.cold_per_theme < o.max_warm || o.min_warm < 2 || o.min_warm > o.max_warm) {
    throw ConfigError("inconsistent synthetic corpus options");
  }
  Rng rng(o.seed);
  fs::create_directories(dir);

  // Items: theme t owns ids [t * per_theme, (t + 1) * per_theme); the last
  // cold_per_theme of each block are cold.
  std::ostringstream items;
  std::ostringstream knowledge;
  std::set<std::string> titles;
  for (std::size_t i = 0; i < o.n_items; ++i) {
    const std::string theme = kThemes[i / per_theme];
    std::string title;
    do {
      title = pseudo_word(rng) + " " + pseudo_word(rng) + " " +
              std::to_string(100 + rng.uniform_index(900));
    } while (!titles.insert(title).second);
    char id[16];
    std::snprintf(id, sizeof id, "I%04zu", i);
    items << json{{"item_id", id},
                  {"title", title},
                  {"brand", kBrands[rng.uniform_index(std::size(kBrands))]},
                  {"category", std::string("Hobby Goods ") +
                                   kSubcategories[rng.uniform_index(std::size(kSubcategories))]}}
                 .dump()
          << '\n';
    knowledge << json{{"title", title},
                      {"text", "made for " + theme + " enthusiasts who want dependable " + theme +
                                   " gear for every " + theme + " session"}}
                     .dump()
              << '\n';
  }

  std::ostringstream interactions;
  const std::size_t warm_per_theme = per_theme - o.cold_per_theme;
  for (std::size_t u = 0; u < o.n_users; ++u) {
    const std::size_t theme = rng.uniform_index(o.n_themes);
    const std::size_t n_warm = o.min_warm + rng.uniform_index(o.max_warm - o.min_warm + 1);
    std::vector<std::size_t> warm(warm_per_theme);
    for (std::size_t k = 0; k < warm_per_theme; ++k) warm[k] = theme * per_theme + k;
    rng.shuffle(std::span<std::size_t>(warm));
    std::vector<std::size_t> seq(warm.begin(), warm.begin() + static_cast<long>(n_warm));
    seq.push_back(theme * per_theme + warm_per_theme + rng.uniform_index(o.cold_per_theme));
    std::int64_t ts = 1'600'000'000 + static_cast<std::int64_t>(rng.uniform_index(1'000'000));
    char user[16];
    std::snprintf(user, sizeof user, "U%04zu", u);
    for (std::size_t item : seq) {
      ts += 60 + static_cast<std::int64_t>(rng.uniform_index(86'400));
      char id[16];
      std::snprintf(id, sizeof id, "I%04zu", item);
      interactions << json{{"user_id", user}, {"item_id", id}, {"timestamp", ts}}.dump() << '\n';
    }
  }

  Files f{dir / "items.jsonl", dir / "interactions.jsonl", dir / "knowledge.jsonl",
          dir / "config.json"};
  io::write_file_atomic(f.items, items.str());
  io::write_file_atomic(f.interactions, interactions.str());
  io::write_file_atomic(f.knowledge, knowledge.str());

  const json shots = json::array(
      {json{{"item_attributes",
             "Title: Arctic Silver 5 AS5-3.5G Thermal Paste\nBrand: Arctic Silver\nCategory: "
             "Industrial & Scientific Industrial Electrical Thermal Management Products Computer "
             "Heatsinks"},
            {"signal_text",
             "Thermal paste designed for computer heatsinks to improve heat transfer and cooling "
             "efficiency."}},
       json{{"item_attributes",
             "Title: Electric Laser Guided Scissors Stainless Steel Blades\nBrand: "
             "Salco\nCategory: Arts, Crafts & Sewing Crafting Craft Supplies Cutting Tools "
             "Scissors"},
            {"signal_text",
             "Precision cutting for crafting projects that need clean and accurate results."}},
       json{{"item_attributes",
             "Title: Hikari Usa Inc AHK01389 Staple 22lb, Medium\nBrand: Hikari Usa "
             "Inc.\nCategory: Pet Supplies Fish & Aquatic Pets Food"},
            {"signal_text",
             "A balanced and nutritious staple food to support the health and growth of "
             "medium-sized fish in aquatic environments."}}});
  const json config = {
      {"seed", 42},
      {"paths",
       {{"items", "items.jsonl"},
        {"interactions", "interactions.jsonl"},
        {"signal_store", "signals.jsonl"},
        {"output_dir", "out"}}},
      {"field_map",
       {{"items", json::array({json::array({"item_id", "item_id"}), json::array({"title", "Title"}),
                               json::array({"brand", "Brand"}),
                               json::array({"category", "Category"})})},
        {"interactions", {{"user", "user_id"}, {"item", "item_id"}, {"timestamp", "timestamp"}}}}},
      {"backend",
       {{"kind", "deterministic_mock"}, {"model_id", "mock-v1"}, {"mock_knowledge", "knowledge.jsonl"}}},
      {"prompting", {{"domain", "Hobby Goods"}, {"shot_count", 3}, {"shots", shots}}},
      {"signal_names", json::array({kSignalName})},
      {"model",
       {{"embed_dim", 64}, {"hash_buckets", 1 << 16}, {"epochs", 5}, {"learning_rate", 0.05}}},
      {"evaluation", {{"protocol", "full_catalog"}, {"ks", json::array({10, 50})}}},
  };
  io::write_file_atomic(f.config, config.dump(2) + "\n");
  return f;
}

}  // namespace lamar::synthetic
