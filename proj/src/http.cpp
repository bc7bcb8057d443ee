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

#include "lamar/http.hpp"

#include <algorithm>
#include <thread>

#include "httplib.h"
#include "lamar/errors.hpp"

namespace lamar::http {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint '" + url + "' has no scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

Response HttplibTransport::post(const std::string& url, const std::string& body,
                                const Headers& headers) {
  const auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) return Response{0, {}, httplib::to_string(res.error())};
  return Response{res->status, res->body, {}};
}

Response RefusingTransport::post(const std::string& url, const std::string&, const Headers&) {
  ++attempts_;
  return Response{0, {}, "network access refused for " + url};
}

bool is_transient(int status) { return status == 0 || status == 429 || status >= 500; }

nlohmann::json post_json_with_retry(Transport& transport, const std::string& url,
                                    const nlohmann::json& payload, const Headers& headers,
                                    const RetryPolicy& policy, int* attempts_out) {
  const std::string body = payload.dump();
  auto backoff = policy.initial_backoff;
  std::string last_error;
  const int max_attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempts_out != nullptr) *attempts_out = attempt;
    const Response res = transport.post(url, body, headers);
    if (res.status >= 200 && res.status < 300) {
      try {
        return nlohmann::json::parse(res.body);
      } catch (const nlohmann::json::parse_error& e) {
        throw PermanentBackendError(res.status, std::string("malformed response body: ") +
                                                    e.what());
      }
    }
    if (!is_transient(res.status)) {
      throw PermanentBackendError(res.status, "HTTP " + std::to_string(res.status) +
                                                  " from " + url + ": " + res.body);
    }
    last_error = res.status == 0 ? res.error : "HTTP " + std::to_string(res.status);
    if (attempt == max_attempts) break;
    if (policy.sleep) {
      policy.sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff = std::min(policy.max_backoff,
                       std::chrono::milliseconds(static_cast<long long>(
                           static_cast<double>(backoff.count()) * policy.multiplier)));
  }
  throw BackendUnavailableError("backend unavailable after " + std::to_string(max_attempts) +
                                " attempts (" + last_error + ")");
}

RateLimiter::RateLimiter(double requests_per_minute, double burst)
    : rate_per_sec_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_per_sec_ <= 0.0) return;
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_sec_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait = (1.0 - tokens_) / rate_per_sec_;
    // Sleeping under the lock queues waiters in arrival order.
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
  }
}

}  // namespace lamar::http
