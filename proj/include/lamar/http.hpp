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

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "json.hpp"

namespace lamar::http {

struct Response {
  int status = 0;  // 0 = no response (connection or transport failure)
  std::string body;
  std::string error;
};

using Headers = std::map<std::string, std::string>;

/// Minimal POST-only transport so tests can observe or refuse traffic.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Response post(const std::string& url, const std::string& body,
                        const Headers& headers) = 0;
};

/// cpp-httplib backed transport (http:// and https://).
class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(60))
      : timeout_(timeout) {}
  Response post(const std::string& url, const std::string& body,
                const Headers& headers) override;

 private:
  std::chrono::seconds timeout_;
};

/// Fails every request; installed where a run must stay offline.
class RefusingTransport final : public Transport {
 public:
  Response post(const std::string& url, const std::string&, const Headers&) override;
  std::size_t attempts() const { return attempts_; }

 private:
  std::size_t attempts_ = 0;
};

/// Splits "https://host:port/a/b" into ("https://host:port", "/a/b").
std::pair<std::string, std::string> split_url(const std::string& url);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
  /// Replaced in tests to avoid real sleeps.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// 429, 5xx and transport failures are worth retrying.
bool is_transient(int status);

/// POSTs JSON with exponential backoff on transient failures. Throws
/// BackendUnavailableError when attempts run out and PermanentBackendError
/// on a non-retryable status.
nlohmann::json post_json_with_retry(Transport& transport, const std::string& url,
                                    const nlohmann::json& payload, const Headers& headers,
                                    const RetryPolicy& policy, int* attempts_out = nullptr);

/// Token bucket: at most requests_per_minute acquisitions per minute after
/// an initial burst. A non-positive rate disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute, double burst = 1.0);
  void acquire();

 private:
  std::mutex mu_;
  double rate_per_sec_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

}  // namespace lamar::http
