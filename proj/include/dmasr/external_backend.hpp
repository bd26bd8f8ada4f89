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

#include <chrono>
#include <memory>
#include <string_view>

#include "dmasr/backend.hpp"

namespace dmasr {

/// Wire protocol, version 1: one JSON object per line in each direction,
/// one response line per request.
///
///   -> {"type":"open_audio","protocol":1,"chunk_id":..,
///       "audio_ref":{"recording_id":..,"start_s":..,"end_s":..}}
///   -> {"type":"turn","chunk_id":..,"turn_index":k,"prompt":..}
///   -> {"type":"close","chunk_id":..}
///   <- {"text":.., "error"?:.., "capabilities"?:{"context_reuse":b,"timestamps":b}}
///
/// An "error" reply fails that turn only. Unparsable replies, a closed
/// stream and timeouts abort the session.
struct ExternalBackendOptions {
  std::chrono::milliseconds timeout{30000};
};

/// `endpoint` is "cmd:<program> [args...]" (whitespace-split, no shell;
/// spawned once and spoken to over stdin/stdout) or "tcp:<host>:<port>".
/// Throws BackendError when the process cannot be started or the socket
/// cannot connect.
std::unique_ptr<Backend> make_external_backend(std::string_view endpoint,
                                               ExternalBackendOptions opts = {});

}  // namespace dmasr
