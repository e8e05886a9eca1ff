#pragma once

// Length-prefixed framing (4-byte big-endian length + payload) and the
// single-producer TCP ingestion service built on it. POSIX only.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "csivitals/config.hpp"
#include "csivitals/error.hpp"
#include "csivitals/pipeline.hpp"
#include "csivitals/report.hpp"
#include "csivitals/trace_io.hpp"

namespace csivitals::wire {

inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

class SocketError : public Error {
 public:
  using Error::Error;
};

/// Owns a file descriptor.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline std::string encode_length(std::uint32_t n) {
  std::string s(4, '\0');
  s[0] = static_cast<char>((n >> 24) & 0xff);
  s[1] = static_cast<char>((n >> 16) & 0xff);
  s[2] = static_cast<char>((n >> 8) & 0xff);
  s[3] = static_cast<char>(n & 0xff);
  return s;
}

inline std::uint32_t decode_length(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

inline std::string frame_message(const std::string& payload) {
  if (payload.size() > kMaxFrameBytes) throw ParameterError("payload too large to frame");
  return encode_length(static_cast<std::uint32_t>(payload.size())) + payload;
}

/// Incremental decoder for a byte stream of frames.
class FrameDecoder {
 public:
  void feed(const char* data, std::size_t n) { buf_.append(data, n); }

  /// Next complete payload; throws ParseError on an oversized length.
  std::optional<std::string> next() {
    if (buf_.size() - pos_ < 4) return compact(), std::nullopt;
    const auto len = decode_length(reinterpret_cast<const unsigned char*>(buf_.data() + pos_));
    if (len > kMaxFrameBytes) throw ParseError("frame length " + std::to_string(len) + " exceeds limit", 0);
    if (buf_.size() - pos_ - 4 < len) return compact(), std::nullopt;
    std::string out = buf_.substr(pos_ + 4, len);
    pos_ += 4 + len;
    return out;
  }

  std::size_t pending_bytes() const { return buf_.size() - pos_; }

 private:
  void compact() {
    if (pos_ > 0) {
      buf_.erase(0, pos_);
      pos_ = 0;
    }
  }
  std::string buf_;
  std::size_t pos_ = 0;
};

inline void send_all(int fd, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SocketError(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

inline void send_frame(int fd, const std::string& payload) { send_all(fd, frame_message(payload)); }

/// Splits "host:port"; an empty host means all interfaces.
inline std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw ParameterError("endpoint must look like HOST:PORT: " + s);
  const std::string host = s.substr(0, colon), port = s.substr(colon + 1);
  int p = -1;
  try {
    std::size_t used = 0;
    p = std::stoi(port, &used);
    if (used != port.size()) p = -1;
  } catch (const std::exception&) {
  }
  if (p < 0 || p > 65535) throw ParameterError("invalid port in endpoint: " + s);
  return {host, static_cast<std::uint16_t>(p)};
}

inline Fd listen_on(const std::string& host, std::uint16_t port, std::uint16_t* bound_port = nullptr) {
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (!fd) throw SocketError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "0.0.0.0" || host == "*") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
  } else if (host == "localhost") {
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw ParameterError("listen address must be an IPv4 literal or localhost: " + host);
  }
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
    throw SocketError("bind " + host + ":" + std::to_string(port) + ": " + std::strerror(errno));
  if (::listen(fd.get(), 8) < 0) throw SocketError(std::string("listen: ") + std::strerror(errno));
  if (bound_port) {
    socklen_t len = sizeof addr;
    ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    *bound_port = ntohs(addr.sin_port);
  }
  return fd;
}

inline Fd connect_to(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string h = host.empty() ? "127.0.0.1" : host;
  if (int rc = ::getaddrinfo(h.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    throw SocketError("resolve " + h + ": " + ::gai_strerror(rc));
  Fd fd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  const int rc = fd ? ::connect(fd.get(), res->ai_addr, res->ai_addrlen) : -1;
  ::freeaddrinfo(res);
  if (rc < 0) throw SocketError("connect " + h + ":" + std::to_string(port) + ": " + std::strerror(errno));
  return fd;
}

/// Reads frames until EOF; each payload goes to `on_frame`.
inline void read_frames(int fd, const std::function<void(std::string)>& on_frame) {
  FrameDecoder dec;
  char buf[1 << 16];
  for (;;) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SocketError(std::string("recv failed: ") + std::strerror(errno));
    }
    if (n == 0) break;
    dec.feed(buf, static_cast<std::size_t>(n));
    while (auto p = dec.next()) on_frame(std::move(*p));
  }
  if (dec.pending_bytes() != 0) throw ParseError("connection closed inside a frame", 0);
}

/// Bounded FIFO between the socket reader and the pipeline. push() blocks
/// while full, which stops reading and lets TCP flow control push back.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : cap_(capacity) {}

  void push(T v) {
    std::unique_lock lk(m_);
    not_full_.wait(lk, [&] { return q_.size() < cap_ || closed_; });
    if (closed_) return;
    q_.push_back(std::move(v));
    not_empty_.notify_one();
  }

  /// Empty optional once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lk(m_);
    not_empty_.wait(lk, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return v;
  }

  void close() {
    std::lock_guard lk(m_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t capacity() const { return cap_; }

 private:
  std::size_t cap_;
  std::deque<T> q_;
  bool closed_ = false;
  std::mutex m_;
  std::condition_variable not_empty_, not_full_;
};

struct SessionOutcome {
  std::size_t frames = 0;
  std::optional<std::string> error;
  std::optional<std::filesystem::path> report_path;
};

/// One producer at a time. A connection's frames run through a fresh
/// NightProcessor; on disconnect the (possibly partial) report is written to
/// out_dir/session-<n>.json and a {"status":"ok"} frame is sent back. Extra
/// concurrent connections get {"status":"busy"} and are closed.
class IngestServer {
 public:
  IngestServer(Config cfg, std::filesystem::path out_dir, std::size_t queue_capacity = 4096)
      : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)), capacity_(queue_capacity) {
    cfg_.validate();
  }

  ~IngestServer() { stop(); }

  /// Binds and returns the actual port (useful with port 0).
  std::uint16_t bind(const std::string& host, std::uint16_t port) {
    listener_ = listen_on(host, port, &port_);
    return port_;
  }

  /// Accepts connections until stop() or until max_sessions sessions have
  /// completed (0 = unlimited).
  void serve(std::size_t max_sessions = 0) {
    if (!listener_) throw SocketError("serve called before bind");
    std::filesystem::create_directories(out_dir_);
    std::thread worker;
    while (!stopping_) {
      pollfd p{listener_.get(), POLLIN, 0};
      const int rc = ::poll(&p, 1, 100);
      if (rc < 0 && errno != EINTR) throw SocketError(std::string("poll: ") + std::strerror(errno));
      if (busy_ == false && worker.joinable()) {
        worker.join();
        if (max_sessions && completed_ >= max_sessions) break;
      }
      if (rc <= 0 || !(p.revents & POLLIN)) continue;
      Fd conn(::accept(listener_.get(), nullptr, nullptr));
      if (!conn) continue;
      if (busy_) {
        try {
          send_frame(conn.get(), R"({"status":"busy"})");
        } catch (const SocketError&) {
        }
        continue;
      }
      busy_ = true;
      const std::size_t n = ++started_;
      worker = std::thread([this, c = std::move(conn), n]() mutable {
        last_ = run_session(std::move(c), n);
        ++completed_;
        busy_ = false;
      });
    }
    if (worker.joinable()) worker.join();
  }

  void stop() { stopping_ = true; }

  std::uint16_t port() const { return port_; }
  std::optional<SessionOutcome> last_outcome() const { return last_; }

 private:
  SessionOutcome run_session(Fd conn, std::size_t n) {
    SessionOutcome out;
    BoundedQueue<std::string> queue(capacity_);
    std::optional<std::string> read_error;
    std::thread reader([&] {
      try {
        read_frames(conn.get(), [&](std::string payload) { queue.push(std::move(payload)); });
      } catch (const std::exception& e) {
        read_error = e.what();
      }
      queue.close();
    });

    NightProcessor proc(cfg_);
    std::size_t line = 0;
    while (auto payload = queue.pop()) {
      if (out.error) continue;  // drain so the reader can finish
      ++line;
      try {
        CsiFrame f;
        try {
          f = decode_frame(*payload, line);
        } catch (const std::exception& e) {
          throw Error("frame " + std::to_string(line - 1) + ": " + e.what());
        }
        proc.push(f);  // names the frame itself
        ++out.frames;
      } catch (const std::exception& e) {
        out.error = e.what();
        ::shutdown(conn.get(), SHUT_RD);
        queue.close();
      }
    }
    reader.join();
    if (!out.error && read_error) out.error = *read_error;

    std::optional<std::string> report_text;
    try {
      NightResult night = proc.finish();
      if (out.error) night.warnings.push_back("session ended early: " + *out.error);
      report_text = report_string(nightly_report(std::move(night), cfg_));
    } catch (const std::exception& e) {
      if (!out.error) out.error = e.what();
    }
    if (report_text) {
      const auto path = out_dir_ / ("session-" + std::to_string(n) + ".json");
      std::ofstream(path, std::ios::binary) << *report_text;
      out.report_path = path;
    }
    try {
      nlohmann::json reply;
      if (out.error) {
        reply["error"] = *out.error;
      } else {
        reply["status"] = "ok";
        reply["frames"] = out.frames;
      }
      if (out.report_path) reply["report"] = out.report_path->string();
      send_frame(conn.get(), reply.dump());
    } catch (const SocketError&) {
    }
    return out;
  }

  Config cfg_;
  std::filesystem::path out_dir_;
  std::size_t capacity_;
  Fd listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> busy_{false};
  std::atomic<std::size_t> completed_{0};
  std::size_t started_ = 0;
  std::optional<SessionOutcome> last_;
};

/// Sends frames as one producer, half-closes, and returns the server's
/// reply frames.
inline std::vector<nlohmann::json> send_trace(const std::string& host, std::uint16_t port,
                                              const std::vector<std::string>& lines) {
  Fd fd = connect_to(host, port);
  std::vector<nlohmann::json> replies;
  std::thread rx([&] {
    try {
      read_frames(fd.get(), [&](std::string p) { replies.push_back(nlohmann::json::parse(p, nullptr, false)); });
    } catch (const std::exception&) {
    }
  });
  try {
    for (const auto& l : lines) send_frame(fd.get(), l);
  } catch (const SocketError&) {
    // The server may close early on a malformed frame; its reply still arrives.
  }
  ::shutdown(fd.get(), SHUT_WR);
  rx.join();
  return replies;
}

}  // namespace csivitals::wire
