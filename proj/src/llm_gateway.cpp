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

#include "lamar/llm_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <sstream>

#include "lamar/errors.hpp"
#include "lamar/io.hpp"
#include "lamar/text.hpp"

namespace lamar::llm {

using nlohmann::json;

std::string to_string(BackendKind kind) {
  return kind == BackendKind::kHttpChat ? "http_chat" : "deterministic_mock";
}

BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "http_chat") return BackendKind::kHttpChat;
  if (s == "deterministic_mock") return BackendKind::kDeterministicMock;
  throw ConfigError("unknown backend kind '" + s + "'");
}

Completion GenerationBackend::generate(const prompting::PromptText& prompt) {
  if (prompt.text.empty()) throw PreconditionError("prompt is empty");
  ++calls_;
  return do_generate(prompt);
}

// ---------------------------------------------------------------- mock

namespace {

constexpr const char* kUseCaseWords[] = {
    "everyday", "travel",   "outdoor", "home",     "workshop", "studio",
    "gifting",  "beginner", "expert",  "compact",  "seasonal", "family",
    "hobby",    "repair",   "storage", "portable", "classroom", "upgrade"};

std::string last_title(const std::string& prompt) {
  std::string title;
  std::istringstream in(prompt);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("Title: ", 0) == 0) title = text::trim(line.substr(7));
  }
  return title.empty() ? "item" : title;
}

}  // namespace

MockBackend::MockBackend(std::string model_id, std::map<std::string, std::string> knowledge)
    : model_id_(std::move(model_id)), knowledge_(std::move(knowledge)) {
  if (model_id_.empty()) throw ConfigError("backend model_id must be non-empty");
}

std::map<std::string, std::string> MockBackend::load_knowledge(
    const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      const json obj = json::parse(line);
      out[obj.at("title").get<std::string>()] = obj.at("text").get<std::string>();
    } catch (const std::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

Completion MockBackend::do_generate(const prompting::PromptText& prompt) {
  const std::string title = last_title(prompt.text);
  const std::string short_title = text::first_words(title, 12);
  std::string out;
  if (auto it = knowledge_.find(title); it != knowledge_.end()) {
    out = "Signal for " + short_title + ": " + it->second;
  } else {
    const std::uint64_t h = text::fnv1a64(prompt.text);
    constexpr std::size_t n = std::size(kUseCaseWords);
    out = "Signal for " + short_title + ": use-case " + kUseCaseWords[h % n] + " " +
          kUseCaseWords[(h / n) % n];
  }
  const auto usage = static_cast<std::int64_t>(text::count_words(prompt.text) +
                                               text::count_words(out));
  return Completion{std::move(out), usage};
}

// ---------------------------------------------------------------- http

HttpChatBackend::HttpChatBackend(BackendConfig config,
                                 std::shared_ptr<http::Transport> transport,
                                 std::string api_key,
                                 std::function<void(std::chrono::milliseconds)> sleep)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      api_key_(std::move(api_key)),
      limiter_(config_.requests_per_minute),
      in_flight_(std::max(1, config_.max_in_flight)) {
  if (config_.model_id.empty()) throw ConfigError("backend model_id must be non-empty");
  if (config_.endpoint.empty()) throw ConfigError("http_chat backend needs an endpoint");
  if (config_.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (config_.max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
  if (!transport_) throw ConfigError("http_chat backend needs a transport");
  retry_.max_attempts = config_.max_attempts;
  retry_.initial_backoff = std::chrono::milliseconds(config_.initial_backoff_ms);
  retry_.sleep = std::move(sleep);
}

json HttpChatBackend::request_body(const std::string& prompt) const {
  return json{{"model", config_.model_id},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", config_.temperature},
              {"max_tokens", config_.max_output_tokens}};
}

Completion HttpChatBackend::do_generate(const prompting::PromptText& prompt) {
  http::Headers headers;
  if (!api_key_.empty()) headers["Authorization"] = "Bearer " + api_key_;
  std::string url = config_.endpoint;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";

  in_flight_.acquire();
  json response;
  try {
    limiter_.acquire();
    response = http::post_json_with_retry(*transport_, url, request_body(prompt.text), headers,
                                          retry_);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();

  try {
    Completion c;
    const auto& content = response.at("choices").at(0).at("message").at("content");
    c.text = content.is_string() ? content.get<std::string>() : std::string();
    if (auto u = response.find("usage"); u != response.end() && u->contains("total_tokens")) {
      c.usage_tokens = u->at("total_tokens").get<std::int64_t>();
    }
    return c;
  } catch (const json::exception& e) {
    throw PermanentBackendError(200, std::string("unexpected chat response shape: ") + e.what());
  }
}

std::unique_ptr<GenerationBackend> make_backend(const BackendConfig& config,
                                                std::shared_ptr<http::Transport> transport) {
  if (config.kind == BackendKind::kDeterministicMock) {
    std::map<std::string, std::string> knowledge;
    if (!config.mock_knowledge.empty()) knowledge = MockBackend::load_knowledge(config.mock_knowledge);
    return std::make_unique<MockBackend>(config.model_id, std::move(knowledge));
  }
  std::string key;
  if (!config.api_key_env.empty()) {
    if (const char* v = std::getenv(config.api_key_env.c_str())) key = v;
  }
  if (!transport) transport = std::make_shared<http::HttplibTransport>();
  return std::make_unique<HttpChatBackend>(config, std::move(transport), std::move(key));
}

// ---------------------------------------------------------------- filter

std::string to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kNone: return "none";
    case RejectReason::kEmpty: return "empty";
    case RejectReason::kTooShort: return "too_short";
    case RejectReason::kTooLong: return "too_long";
    case RejectReason::kRefusal: return "refusal";
    case RejectReason::kPlaceholder: return "placeholder";
  }
  return "unknown";
}

FilterResult quality_filter(std::string_view text_in, const FilterConfig& config) {
  const std::string t = text::trim(text_in);
  if (t.empty()) return {false, RejectReason::kEmpty, "empty"};
  const std::size_t words = text::count_words(t);
  if (words < config.min_words) {
    return {false, RejectReason::kTooShort, "too_short: " + std::to_string(words) + " words"};
  }
  if (words > config.max_words) {
    return {false, RejectReason::kTooLong, "too_long: " + std::to_string(words) + " words"};
  }
  for (const auto& marker : config.refusal_markers) {
    if (text::contains_icase(t, marker)) {
      return {false, RejectReason::kRefusal, "refusal: contains '" + marker + "'"};
    }
  }
  if (t.find('{') != std::string::npos || t.find('}') != std::string::npos) {
    return {false, RejectReason::kPlaceholder, "placeholder: contains braces"};
  }
  return {true, RejectReason::kNone, {}};
}

// ---------------------------------------------------------------- store

json to_json(const SemanticSignal& s) {
  return json{{"schema_version", SignalStore::kSchemaVersion},
              {"item_id", s.item_id},
              {"signal_name", s.signal_name},
              {"text", s.text},
              {"model_id", s.model_id},
              {"prompt_hash", s.prompt_hash},
              {"created_at", s.created_at}};
}

SemanticSignal signal_from_json(const json& j) {
  SemanticSignal s;
  s.item_id = j.at("item_id").get<std::string>();
  s.signal_name = j.at("signal_name").get<std::string>();
  s.text = j.at("text").get<std::string>();
  s.model_id = j.at("model_id").get<std::string>();
  s.prompt_hash = j.value("prompt_hash", std::string());
  s.created_at = j.value("created_at", std::int64_t{0});
  return s;
}

std::string SignalStore::key(const std::string& item_id, const std::string& signal_name,
                             const std::string& model_id) {
  std::string k = item_id;
  k += '\x1f';
  k += signal_name;
  k += '\x1f';
  k += model_id;
  return k;
}

SignalStore::SignalStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  io::for_each_line(path_, [&](std::size_t, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      const json obj = json::parse(line);
      if (obj.value("schema_version", 0) > kSchemaVersion) {
        ++skipped_lines_;
        return;
      }
      SemanticSignal s = signal_from_json(obj);
      const std::string k = key(s.item_id, s.signal_name, s.model_id);
      if (index_.count(k) > 0) {
        ++skipped_lines_;
        return;
      }
      index_.emplace(k, records_.size());
      records_.push_back(std::move(s));
    } catch (const std::exception&) {
      // A torn final line from an interrupted append lands here.
      ++skipped_lines_;
    }
  });
}

std::optional<SemanticSignal> SignalStore::lookup(const std::string& item_id,
                                                  const std::string& signal_name,
                                                  const std::string& model_id) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(key(item_id, signal_name, model_id));
  if (it == index_.end()) return std::nullopt;
  return records_[it->second];
}

void SignalStore::append(const SemanticSignal& signal) {
  std::unique_lock lock(mu_);
  const std::string k = key(signal.item_id, signal.signal_name, signal.model_id);
  if (index_.count(k) > 0) {
    throw DuplicateKeyError("signal already stored for item '" + signal.item_id + "', '" +
                            signal.signal_name + "', model '" + signal.model_id + "'");
  }
  if (!out_.is_open()) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open signal store '" + path_.string() + "' for append");
  }
  // One write per record keeps each line whole on disk.
  const std::string line = to_json(signal).dump() + "\n";
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw IoError("append to signal store '" + path_.string() + "' failed");
  index_.emplace(k, records_.size());
  records_.push_back(signal);
}

std::size_t SignalStore::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::vector<SemanticSignal> SignalStore::records() const {
  std::shared_lock lock(mu_);
  return records_;
}

// ---------------------------------------------------------------- cached generation

SemanticSignal generate_signal_cached(SignalStore& store, GenerationBackend& backend,
                                      const ItemRecord& item, const std::string& signal_name,
                                      const prompting::PromptText& prompt,
                                      const CachedGenerationOptions& options) {
  if (auto hit = store.lookup(item.item_id, signal_name, backend.model_id())) return *hit;

  std::string last_text;
  std::string last_reason;
  const int attempts = std::max(1, options.max_filter_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    Completion c = backend.generate(prompt);
    const FilterResult verdict = quality_filter(c.text, options.filter);
    if (!verdict) {
      last_text = std::move(c.text);
      last_reason = verdict.detail;
      continue;
    }
    SemanticSignal s;
    s.item_id = item.item_id;
    s.signal_name = signal_name;
    s.text = text::trim(c.text);
    s.model_id = backend.model_id();
    s.prompt_hash = prompt.content_hash;
    s.created_at = options.clock
                       ? options.clock()
                       : std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
    try {
      store.append(s);
    } catch (const DuplicateKeyError&) {
      // Another worker stored this key first; its record wins.
      return *store.lookup(item.item_id, signal_name, backend.model_id());
    }
    return s;
  }
  throw SignalQualityError("all " + std::to_string(attempts) + " completions for item '" +
                               item.item_id + "' were rejected (" + last_reason + ")",
                           last_text);
}

}  // namespace lamar::llm
