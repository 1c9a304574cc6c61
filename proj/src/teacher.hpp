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
//
// Client for the black-box teacher model. Two implementations share one
// interface: HttpTeacher speaks the chat-completions JSON protocol over
// HTTP, and ScriptedTeacher replays canned completions for offline tests.
// The API key, when the server wants one, comes from the CODI_API_KEY
// environment variable; it is never accepted as a flag or config field.

#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <utility>

#include "error.hpp"
#include "rng.hpp"

namespace codi {

struct RetryPolicy {
  int max_retries = 3;                          // extra attempts after the first
  std::chrono::milliseconds base_backoff{500};  // wait before the first retry
  double factor = 2.0;                          // growth per retry
  double jitter_fraction = 0.1;                 // each wait scaled by 1 ± this
};

struct TeacherConfig {
  std::string endpoint;  // http URL; path defaults to /v1/chat/completions
  std::string model;
  double temperature = 0.7;  // decoding default; the source setup is unknown
  std::uint64_t max_output_tokens = 1024;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  int max_in_flight = 4;
};

// Throws ConfigError when a field is out of range.
void check_teacher_config(const TeacherConfig& config);

struct TurnResponse {
  std::string text;  // first completion choice, byte-for-byte as served
  std::uint64_t prompt_tokens = 0;      // 0 when the server omits usage
  std::uint64_t completion_tokens = 0;  // 0 when the server omits usage
  std::chrono::duration<double> latency{0};
};

class Teacher {
 public:
  virtual ~Teacher() = default;

  // `link_id` and `turn_index` identify the chain step; scripted teachers
  // key their replies on them while network teachers use only the prompt.
  virtual TurnResponse generate(const std::string& prompt,
                                const std::string& link_id,
                                std::uint64_t turn_index) = 0;

  TurnResponse generate(const std::string& prompt) { return generate(prompt, "", 0); }
};

// Blocking chat-completions client. Shareable across threads; a counting
// semaphore admits at most `max_in_flight` requests onto the wire at once.
// Transient failures (timeouts, HTTP 429/5xx, refused connections) are
// retried with exponential backoff and multiplicative jitter; other HTTP
// statuses fail immediately. After retries are exhausted the last failure
// is thrown: Timeout, RateLimited, ServerError, or IoError when the host
// never answered at all.
class HttpTeacher : public Teacher {
 public:
  // `sleeper` replaces the real clock in tests; default is sleep_for.
  using Sleeper = std::function<void(std::chrono::duration<double>)>;

  explicit HttpTeacher(TeacherConfig config, Sleeper sleeper = {});

  TurnResponse generate(const std::string& prompt, const std::string& link_id,
                        std::uint64_t turn_index) override;
  using Teacher::generate;

  const TeacherConfig& config() const { return config_; }

 private:
  std::chrono::duration<double> backoff_for(int retry_index);

  TeacherConfig config_;
  std::string host_;  // "host" or "host:port"
  std::string path_;
  Sleeper sleeper_;
  std::counting_semaphore<> slots_;
  std::mutex jitter_mutex_;
  Rng jitter_rng_;
};

// Deterministic teacher for offline runs. Replies come from a persistent
// script keyed on (link_id, turn_index); misses fall back to a queue that
// is consumed front to back. An unmatched query with an empty queue throws
// ScriptExhausted.
class ScriptedTeacher : public Teacher {
 public:
  using Script = std::map<std::pair<std::string, std::uint64_t>, std::string>;

  ScriptedTeacher(Script script, std::deque<std::string> fallback)
      : script_(std::move(script)), fallback_(std::move(fallback)) {}

  TurnResponse generate(const std::string& prompt, const std::string& link_id,
                        std::uint64_t turn_index) override;
  using Teacher::generate;

 private:
  std::mutex mutex_;
  Script script_;
  std::deque<std::string> fallback_;
};

}  // namespace codi
