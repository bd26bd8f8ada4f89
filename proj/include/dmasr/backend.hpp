// Copyright 2026 The dmasr Authors
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

#include <memory>
#include <string>

#include "dmasr/time.hpp"

namespace dmasr {

/// Where the audio for a chunk lives. The harness never moves audio bytes;
/// backends resolve this reference themselves.
struct AudioRef {
  std::string recording_id;
  Time start;
  Time end;
};

struct BackendCapabilities {
  /// The backend keeps the state of earlier turns (a KV cache, typically).
  /// Without it the harness replays the dialogue so far in every prompt.
  bool supports_context_reuse = true;
  bool supports_timestamps = true;
};

/// One chunk's conversation with a recognizer: exactly one open_audio, then
/// any number of turn calls, then close. Calls are strictly sequential.
class BackendSession {
 public:
  virtual ~BackendSession() = default;

  virtual BackendCapabilities capabilities() const = 0;
  /// Throws BackendError; a failure here is always fatal for the session.
  virtual void open_audio(const std::string& chunk_id, const AudioRef& audio) = 0;
  /// Returns the raw response text. Throws BackendError.
  virtual std::string turn(const std::string& prompt) = 0;
  virtual void close() = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::unique_ptr<BackendSession> open_session() = 0;
  /// Whether sessions may be opened and driven from several threads.
  virtual bool concurrent_sessions() const { return false; }
};

}  // namespace dmasr
