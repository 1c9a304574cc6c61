// Copyright 2026 The CoDi Authors
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

#include "teacher.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <json.hpp>

namespace codi {
namespace {

using nlohmann::json;

struct Endpoint {
  std::string scheme_host_port;  // e.g. "http://127.0.0.1:8080"
  std::string path;              // e.g. "/v1/chat/completions"
};

Endpoint split_endpoint(const std::string& url) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0) {
    throw Error(ErrorCode::ConfigError,
                "teacher endpoint must start with http:// (got '" + url + "')");
  }
  const std::size_t path_pos = url.find('/', scheme.size());
  Endpoint ep;
  if (path_pos == std::string::npos) {
    ep.scheme_host_port = url;
    ep.path = "/v1/chat/completions";
  } else {
    ep.scheme_host_port = url.substr(0, path_pos);
    ep.path = url.substr(path_pos);
    if (ep.path == "/") ep.path = "/v1/chat/completions";
  }
  if (ep.scheme_host_port.size() <= scheme.size()) {
    throw Error(ErrorCode::ConfigError, "teacher endpoint has no host: '" + url + "'");
  }
  return ep;
}

TurnResponse parse_completion(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse,
                std::string("completion body is not JSON: ") + e.what());
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::MalformedResponse, "completion has no choices");
  }
  const json& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw Error(ErrorCode::MalformedResponse,
                "completion choice lacks a string message.content");
  }
  TurnResponse out;
  out.text = first["message"]["content"].get<std::string>();
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const json& usage = doc["usage"];
    if (usage.contains("prompt_tokens") && usage["prompt_tokens"].is_number_unsigned()) {
      out.prompt_tokens = usage["prompt_tokens"].get<std::uint64_t>();
    }
    if (usage.contains("completion_tokens") &&
        usage["completion_tokens"].is_number_unsigned()) {
      out.completion_tokens = usage["completion_tokens"].get<std::uint64_t>();
    }
  }
  return out;
}

uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

void check_teacher_config(const TeacherConfig& config) {
  split_endpoint(config.endpoint);  // validates scheme and host
  if (config.model.empty()) {
    throw Error(ErrorCode::ConfigError, "teacher model identifier is empty");
  }
  if (!std::isfinite(config.temperature) || config.temperature < 0.0) {
    throw Error(ErrorCode::ConfigError, "temperature must be finite and >= 0");
  }
  if (config.max_output_tokens == 0) {
    throw Error(ErrorCode::ConfigError, "max_output_tokens must be >= 1");
  }
  if (config.timeout.count() <= 0) {
    throw Error(ErrorCode::ConfigError, "request timeout must be positive");
  }
  if (config.retry.max_retries < 0) {
    throw Error(ErrorCode::ConfigError, "max_retries must be >= 0");
  }
  if (config.retry.base_backoff.count() < 0) {
    throw Error(ErrorCode::ConfigError, "base_backoff must be >= 0");
  }
  if (!std::isfinite(config.retry.factor) || config.retry.factor < 1.0) {
    throw Error(ErrorCode::ConfigError, "backoff factor must be >= 1");
  }
  if (!std::isfinite(config.retry.jitter_fraction) ||
      config.retry.jitter_fraction < 0.0 || config.retry.jitter_fraction >= 1.0) {
    throw Error(ErrorCode::ConfigError, "jitter fraction must be in [0, 1)");
  }
  if (config.max_in_flight < 1) {
    throw Error(ErrorCode::ConfigError, "max in-flight requests must be >= 1");
  }
}

HttpTeacher::HttpTeacher(TeacherConfig config, Sleeper sleeper)
    : config_(std::move(config)),
      sleeper_(std::move(sleeper)),
      slots_(0),
      jitter_rng_(entropy_seed()) {
  check_teacher_config(config_);
  const Endpoint ep = split_endpoint(config_.endpoint);
  host_ = ep.scheme_host_port;
  path_ = ep.path;
  if (!sleeper_) {
    sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  }
  slots_.release(config_.max_in_flight);
}

std::chrono::duration<double> HttpTeacher::backoff_for(int retry_index) {
  const double base = std::chrono::duration<double>(config_.retry.base_backoff).count();
  const double wait = base * std::pow(config_.retry.factor, retry_index);
  double scale = 1.0;
  if (config_.retry.jitter_fraction > 0.0) {
    std::lock_guard<std::mutex> lock(jitter_mutex_);
    scale = 1.0 + config_.retry.jitter_fraction * (2.0 * jitter_rng_.next_double() - 1.0);
  }
  return std::chrono::duration<double>(wait * scale);
}

TurnResponse HttpTeacher::generate(const std::string& prompt,
                                   const std::string& /*link_id*/,
                                   std::uint64_t /*turn_index*/) {
  if (prompt.empty()) {
    throw Error(ErrorCode::InvalidArgument, "teacher prompt is empty");
  }

  const json body = {
      {"model", config_.model},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_output_tokens},
  };
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* key = std::getenv("CODI_API_KEY"); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::exception_ptr transient;  // last retryable failure, thrown when retries run out
  const int attempts = config_.retry.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) sleeper_(backoff_for(attempt - 1));

    httplib::Result res;
    const auto started = std::chrono::steady_clock::now();
    {
      slots_.acquire();
      httplib::Client client(host_);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      res = client.Post(path_, headers, payload, "application/json");
      slots_.release();
    }
    const auto elapsed = std::chrono::steady_clock::now() - started;

    if (!res) {
      switch (res.error()) {
        case httplib::Error::ConnectionTimeout:
        case httplib::Error::Read:
        case httplib::Error::Write:
          transient = std::make_exception_ptr(
              Error(ErrorCode::Timeout, "teacher request timed out"));
          continue;
        case httplib::Error::Connection:
          transient = std::make_exception_ptr(Error(
              ErrorCode::IoError, "teacher unreachable at " + config_.endpoint));
          continue;
        default:
          throw Error(ErrorCode::IoError,
                      "teacher transport failure: " + httplib::to_string(res.error()));
      }
    }

    if (res->status == 200) {
      TurnResponse out = parse_completion(res->body);
      out.latency = std::chrono::duration<double>(elapsed);
      return out;
    }
    if (res->status == 429) {
      transient = std::make_exception_ptr(
          Error(ErrorCode::RateLimited, "teacher rate-limited the request"));
      continue;
    }
    if (res->status >= 500) {
      transient = std::make_exception_ptr(
          Error(ErrorCode::ServerError,
                "teacher returned HTTP " + std::to_string(res->status)));
      continue;
    }
    // Remaining 4xx statuses (bad request, auth) will not improve on retry.
    throw Error(ErrorCode::ServerError,
                "teacher returned HTTP " + std::to_string(res->status));
  }
  std::rethrow_exception(transient);
}

TurnResponse ScriptedTeacher::generate(const std::string& prompt,
                                       const std::string& link_id,
                                       std::uint64_t turn_index) {
  if (prompt.empty()) {
    throw Error(ErrorCode::InvalidArgument, "teacher prompt is empty");
  }
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = script_.find({link_id, turn_index});
  TurnResponse out;
  if (it != script_.end()) {
    out.text = it->second;
    return out;
  }
  if (!fallback_.empty()) {
    out.text = fallback_.front();
    fallback_.pop_front();
    return out;
  }
  throw Error(ErrorCode::ScriptExhausted,
              "no scripted completion for link '" + link_id + "' turn " +
                  std::to_string(turn_index));
}

}  // namespace codi
