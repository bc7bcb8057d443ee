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
#include <string>

namespace lamar::synthetic {

/// A corpus whose next item is fixed by a latent theme that no base
/// attribute reveals. Each user stays within one theme; the user's final
/// interaction is a "cold" item that never appears earlier in any sequence.
/// The theme is only recoverable from the knowledge file the mock backend
/// turns into signal text.
struct Options {
  std::size_t n_items = 200;
  std::size_t n_users = 500;
  std::size_t n_themes = 20;
  std::size_t cold_per_theme = 3;
  std::size_t min_warm = 4;
  std::size_t max_warm = 6;
  std::uint64_t seed = 7;
};

inline constexpr const char* kSignalName = "Primary Use Case";

struct Files {
  std::filesystem::path items;
  std::filesystem::path interactions;
  std::filesystem::path knowledge;
  std::filesystem::path config;
};

/// Writes items.jsonl, interactions.jsonl, knowledge.jsonl and config.json
/// (mock backend, one signal name) into dir.
Files write_corpus(const std::filesystem::path& dir, const Options& options = {});

}  // namespace lamar::synthetic
