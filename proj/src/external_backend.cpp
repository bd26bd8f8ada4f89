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

#include "dmasr/external_backend.hpp"

#include <csignal>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "dmasr/error.hpp"
#include "dmasr/text.hpp"

namespace dmasr {

namespace {

using json = nlohmann::ordered_json;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    reset(o.release());
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset(int fd = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_ = -1;
};

/// Line-oriented duplex byte stream with a read deadline.
class LineChannel {
 public:
  LineChannel(Fd in, Fd out) : in_(std::move(in)), out_(std::move(out)) {}
  virtual ~LineChannel() = default;

  void write_line(const std::string& line) {
    std::string buf = line + "\n";
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::write(out_.get(), buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("backend write failed: ") + std::strerror(errno), true);
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto nl = pending_.find('\n'); nl != std::string::npos) {
        std::string line = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw BackendError("backend timed out", true);
      pollfd pfd{in_.get(), POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("poll failed: ") + std::strerror(errno), true);
      }
      if (rc == 0) throw BackendError("backend timed out", true);
      char buf[4096];
      const ssize_t n = ::read(in_.get(), buf, sizeof(buf));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("backend read failed: ") + std::strerror(errno), true);
      }
      if (n == 0) throw BackendError("backend closed the stream", true);
      pending_.append(buf, static_cast<std::size_t>(n));
    }
  }

 private:
  Fd in_;
  Fd out_;
  std::string pending_;
};

class ProcessChannel : public LineChannel {
 public:
  ProcessChannel(Fd in, Fd out, pid_t pid) : LineChannel(std::move(in), std::move(out)), pid_(pid) {}
  ~ProcessChannel() override {
    ::kill(pid_, SIGTERM);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

std::unique_ptr<LineChannel> spawn(const std::string& command) {
  auto args = text::split_whitespace(command);
  if (args.empty()) throw BackendError("empty backend command", true);
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw BackendError("pipe failed", true);
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw BackendError("pipe failed", true);
  }
  // Exec failure is reported through a close-on-exec pipe.
  int status_pipe[2];
  if (::pipe2(status_pipe, O_CLOEXEC) != 0) throw BackendError("pipe failed", true);

  const pid_t pid = ::fork();
  if (pid < 0) throw BackendError("fork failed", true);
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::close(status_pipe[0]);
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    const int err = errno;
    (void)!::write(status_pipe[1], &err, sizeof(err));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  ::close(status_pipe[1]);
  int err = 0;
  const ssize_t n = ::read(status_pipe[0], &err, sizeof(err));
  ::close(status_pipe[0]);
  if (n > 0) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::waitpid(pid, nullptr, 0);
    throw BackendError(std::string("cannot start backend: ") + std::strerror(err), true);
  }
  return std::make_unique<ProcessChannel>(Fd(from_child[0]), Fd(to_child[1]), pid);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw BackendError("cannot resolve " + host + ": " + ::gai_strerror(rc), true);
  }
  Fd sock;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    Fd s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (s.get() < 0) continue;
    if (::connect(s.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
      sock = std::move(s);
      break;
    }
  }
  ::freeaddrinfo(res);
  if (sock.get() < 0) throw BackendError("cannot connect to " + host + ":" + port, true);
  Fd dup(::dup(sock.get()));
  return std::make_unique<LineChannel>(std::move(sock), std::move(dup));
}

class ExternalSession : public BackendSession {
 public:
  ExternalSession(LineChannel& channel, bool& broken, const ExternalBackendOptions& opts)
      : channel_(channel), broken_(broken), opts_(opts) {}

  BackendCapabilities capabilities() const override { return caps_; }

  void open_audio(const std::string& chunk_id, const AudioRef& audio) override {
    chunk_id_ = chunk_id;
    json req;
    req["type"] = "open_audio";
    req["protocol"] = 1;
    req["chunk_id"] = chunk_id;
    req["audio_ref"] = {{"recording_id", audio.recording_id},
                        {"start_s", audio.start.seconds()},
                        {"end_s", audio.end.seconds()}};
    const auto reply = exchange(req);
    if (reply.contains("error")) {
      throw BackendError("open_audio rejected: " + reply["error"].dump(), true);
    }
    if (auto it = reply.find("capabilities"); it != reply.end() && it->is_object()) {
      caps_.supports_context_reuse = it->value("context_reuse", true);
      caps_.supports_timestamps = it->value("timestamps", true);
    }
    open_ = true;
  }

  std::string turn(const std::string& prompt) override {
    if (!open_) throw BackendError("turn before open_audio", true);
    json req;
    req["type"] = "turn";
    req["chunk_id"] = chunk_id_;
    req["turn_index"] = turn_index_++;
    req["prompt"] = prompt;
    const auto reply = exchange(req);
    if (reply.contains("error")) throw BackendError("turn failed: " + reply["error"].dump(), false);
    return reply["text"].get<std::string>();
  }

  void close() override {
    if (!open_ || broken_) return;
    open_ = false;
    json req;
    req["type"] = "close";
    req["chunk_id"] = chunk_id_;
    exchange(req);
  }

 private:
  json exchange(const json& req) {
    if (broken_) throw BackendError("backend connection is unusable", true);
    try {
      channel_.write_line(req.dump());
      const auto line = channel_.read_line(opts_.timeout);
      json reply;
      try {
        reply = json::parse(line);
      } catch (const json::parse_error&) {
        throw BackendError("protocol violation: malformed reply '" + line.substr(0, 80) + "'", true);
      }
      if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
        throw BackendError("protocol violation: reply lacks a string 'text'", true);
      }
      return reply;
    } catch (const BackendError& e) {
      // A timed-out or garbled stream cannot be resynchronized.
      if (e.fatal()) broken_ = true;
      throw;
    }
  }

  LineChannel& channel_;
  bool& broken_;
  const ExternalBackendOptions& opts_;
  BackendCapabilities caps_;
  std::string chunk_id_;
  int turn_index_ = 0;
  bool open_ = false;
};

class ExternalBackend : public Backend {
 public:
  ExternalBackend(std::unique_ptr<LineChannel> channel, ExternalBackendOptions opts)
      : channel_(std::move(channel)), opts_(opts) {}

  std::unique_ptr<BackendSession> open_session() override {
    if (broken_) throw BackendError("backend connection is unusable", true);
    return std::make_unique<ExternalSession>(*channel_, broken_, opts_);
  }

 private:
  std::unique_ptr<LineChannel> channel_;
  ExternalBackendOptions opts_;
  bool broken_ = false;
};

}  // namespace

std::unique_ptr<Backend> make_external_backend(std::string_view endpoint,
                                               ExternalBackendOptions opts) {
  // Writes to a backend that died must surface as EPIPE, not kill us.
  std::signal(SIGPIPE, SIG_IGN);
  if (endpoint.substr(0, 4) == "cmd:") {
    return std::make_unique<ExternalBackend>(spawn(std::string(endpoint.substr(4))), opts);
  }
  if (endpoint.substr(0, 4) == "tcp:") {
    const auto rest = endpoint.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) throw BackendError("tcp endpoint needs host:port", true);
    return std::make_unique<ExternalBackend>(
        connect_tcp(std::string(rest.substr(0, colon)), std::string(rest.substr(colon + 1))), opts);
  }
  throw BackendError("unknown backend endpoint '" + std::string(endpoint) +
                         "'; expected cmd:<command> or tcp:<host>:<port>",
                     true);
}

}  // namespace dmasr
