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
#include <string_view>
#include <vector>

namespace lamar::text {

std::string trim(std::string_view s);

/// Whitespace-delimited words. This is the token unit for every budget.
std::vector<std::string_view> split_words(std::string_view s);

std::size_t count_words(std::string_view s);

/// Keeps the first n whitespace-delimited words, joined by single spaces.
std::string first_words(std::string_view s, std::size_t n);

std::string to_lower(std::string_view s);

/// Lower-cases and strips leading/trailing non-alphanumeric bytes.
/// May return an empty string (pure punctuation).
std::string normalize_token(std::string_view word);

bool contains_icase(std::string_view haystack, std::string_view needle);

/// 64-bit FNV-1a. Stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view s,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view s);

/// 128-bit content hash (first 32 hex chars of SHA-256).
std::string content_hash(std::string_view s);

}  // namespace lamar::text
