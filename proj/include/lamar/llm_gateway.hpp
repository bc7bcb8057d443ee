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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lamar/http.hpp"
#include "lamar/prompting.hpp"
#include "lamar/types.hpp"

namespace lamar::llm {

enum class BackendKind { kHttpChat, kDeterministicMock };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& s);

struct BackendConfig {
  BackendKind kind = BackendKind::kDeterministicMock;
  std::string model_id = "mock-v1";
  std::string endpoint;  // base URL, e.g. https://api.openai.com/v1
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_output_tokens = 256;
  int max_attempts = 5;
  int initial_backoff_ms = 500;
  double requests_per_minute = 60.0;
  int max_in_flight = 4;
  /// Mock only: JSONL of {"title": ..., "text": ...} entries the mock
  /// "knows" about. Empty means the generic template for every item.
  std::filesystem::path mock_knowledge;

  bool operator==(const BackendConfig&) const = default;
};

struct Completion {
  std::string text;
  std::int64_t usage_tokens = 0;
};

/// The generation model. generate() counts calls; subclasses implement
/// do_generate().
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  /// Throws PreconditionError on an empty prompt.
  Completion generate(const prompting::PromptText& prompt);

  virtual const std::string& model_id() const = 0;
  std::size_t calls() const { return calls_.load(); }

 protected:
  virtual Completion do_generate(const prompting::PromptText& prompt) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

/// Output is a pure function of the prompt text.
class MockBackend final : public GenerationBackend {
 public:
  explicit MockBackend(std::string model_id,
                       std::map<std::string, std::string> knowledge = {});

  static std::map<std::string, std::string> load_knowledge(const std::filesystem::path& path);

  const std::string& model_id() const override { return model_id_; }

 protected:
  Completion do_generate(const prompting::PromptText& prompt) override;

 private:
  std::string model_id_;
  std::map<std::string, std::string> knowledge_;  // Title -> signal text
};

/// OpenAI-compatible chat-completions client.
class HttpChatBackend final : public GenerationBackend {
 public:
  HttpChatBackend(BackendConfig config, std::shared_ptr<http::Transport> transport,
                  std::string api_key,
                  std::function<void(std::chrono::milliseconds)> sleep = {});

  const std::string& model_id() const override { return config_.model_id; }

  /// The request body sent for a prompt.
  nlohmann::json request_body(const std::string& prompt) const;

 protected:
  Completion do_generate(const prompting::PromptText& prompt) override;

 private:
  BackendConfig config_;
  std::shared_ptr<http::Transport> transport_;
  std::string api_key_;
  http::RetryPolicy retry_;
  http::RateLimiter limiter_;
  std::counting_semaphore<> in_flight_;
};

/// Builds the configured backend. The API key is read from the environment
/// variable named in the config (may be absent for local endpoints).
std::unique_ptr<GenerationBackend> make_backend(const BackendConfig& config,
                                                std::shared_ptr<http::Transport> transport);

struct FilterConfig {
  std::size_t min_words = 5;
  std::size_t max_words = 120;
  std::vector<std::string> refusal_markers = {"I cannot", "as an AI"};

  bool operator==(const FilterConfig&) const = default;
};

enum class RejectReason { kNone, kEmpty, kTooShort, kTooLong, kRefusal, kPlaceholder };

struct FilterResult {
  bool accepted = false;
  RejectReason reason = RejectReason::kNone;
  std::string detail;

  explicit operator bool() const { return accepted; }
};

std::string to_string(RejectReason reason);

FilterResult quality_filter(std::string_view text, const FilterConfig& config = {});

/// Append-only JSONL log of signals indexed by (item_id, signal_name,
/// model_id). Reopening rebuilds the same index. Lookups may run
/// concurrently; appends are serialized.
class SignalStore {
 public:
  static constexpr int kSchemaVersion = 1;

  /// Loads existing records, if any. The file is created on first append.
  explicit SignalStore(std::filesystem::path path);
  SignalStore(const SignalStore&) = delete;
  SignalStore& operator=(const SignalStore&) = delete;

  std::optional<SemanticSignal> lookup(const std::string& item_id,
                                       const std::string& signal_name,
                                       const std::string& model_id) const;

  /// Throws DuplicateKeyError when the key is already stored.
  void append(const SemanticSignal& signal);

  std::size_t size() const;
  /// File order.
  std::vector<SemanticSignal> records() const;
  const std::filesystem::path& path() const { return path_; }
  /// Lines that could not be decoded, or duplicates, seen while loading.
  std::size_t skipped_lines() const { return skipped_lines_; }

 private:
  static std::string key(const std::string& item_id, const std::string& signal_name,
                         const std::string& model_id);

  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::vector<SemanticSignal> records_;
  std::map<std::string, std::size_t> index_;
  std::ofstream out_;
  std::size_t skipped_lines_ = 0;
};

nlohmann::json to_json(const SemanticSignal& s);
SemanticSignal signal_from_json(const nlohmann::json& j);

struct CachedGenerationOptions {
  FilterConfig filter;
  int max_filter_attempts = 3;
  std::function<std::int64_t()> clock;  // unix seconds; system clock when empty
};

/// Returns the stored signal on a cache hit without touching the backend.
/// On a miss, generates, filters, appends and returns. Throws
/// SignalQualityError when every attempt is rejected.
SemanticSignal generate_signal_cached(SignalStore& store, GenerationBackend& backend,
                                      const ItemRecord& item, const std::string& signal_name,
                                      const prompting::PromptText& prompt,
                                      const CachedGenerationOptions& options = {});

}  // namespace lamar::llm
