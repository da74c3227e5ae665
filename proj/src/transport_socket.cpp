#include "spnmpc/transport_socket.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "spnmpc/errors.hpp"

namespace spnmpc {

namespace {

using Clock = std::chrono::steady_clock;

void set_recv_timeout(int fd, long ms) {
  timeval tv{};
  tv.tv_sec = ms / 1000;
  tv.tv_usec = (ms % 1000) * 1000;
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

void close_quiet(int fd) {
  if (fd >= 0) ::close(fd);
}

sockaddr_in parse_endpoint(const std::string& host, uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
    throw ConfigError("endpoint host must be a numeric IPv4 address, got " +
                      host);
  return sa;
}

int bind_listener(const std::string& host, uint16_t port,
                  uint16_t* actual_port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ConnectivityError("socket(): " + std::string(strerror(errno)));
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa = parse_endpoint(host, port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    std::string err = strerror(errno);
    close_quiet(fd);
    throw ConnectivityError("bind " + host + ":" + std::to_string(port) +
                            ": " + err);
  }
  if (::listen(fd, 64) != 0) {
    std::string err = strerror(errno);
    close_quiet(fd);
    throw ConnectivityError("listen: " + err);
  }
  if (actual_port) {
    sockaddr_in got{};
    socklen_t len = sizeof(got);
    if (getsockname(fd, reinterpret_cast<sockaddr*>(&got), &len) != 0) {
      close_quiet(fd);
      throw ConnectivityError("getsockname failed");
    }
    *actual_port = ntohs(got.sin_port);
  }
  return fd;
}

void write_all(int fd, const uint8_t* data, size_t len) {
  size_t off = 0;
  while (off < len) {
    ssize_t n = ::send(fd, data + off, len - off, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && (errno == EINTR)) continue;
      throw ConnectivityError("send failed: " + std::string(strerror(errno)));
    }
    off += static_cast<size_t>(n);
  }
}

// Blocking frame read used only for the HELLO handshake; the per-connection
// reader threads use their own buffered loop.
Message read_frame_blocking(int fd, const char* stage) {
  auto read_exact = [fd, stage](uint8_t* out, size_t len) {
    size_t off = 0;
    while (off < len) {
      ssize_t n = ::recv(fd, out + off, len - off, 0);
      if (n == 0)
        throw ConnectivityError(std::string("peer closed during ") + stage);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ConnectivityError(std::string(stage) + " failed: " +
                                strerror(errno));
      }
      off += static_cast<size_t>(n);
    }
  };
  uint8_t len_buf[4];
  read_exact(len_buf, 4);
  uint32_t body_len = (uint32_t(len_buf[0]) << 24) |
                      (uint32_t(len_buf[1]) << 16) |
                      (uint32_t(len_buf[2]) << 8) | uint32_t(len_buf[3]);
  if (body_len > (1u << 24))
    throw ConnectivityError("oversized handshake frame");
  std::vector<uint8_t> body(body_len);
  if (body_len) read_exact(body.data(), body_len);
  return decode_body(body);
}

// Inbox shared by all reader threads of one node.
class Mailbox {
 public:
  void push(Message m) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      q_.push_back(std::move(m));
    }
    cv_.notify_one();
  }
  void fail(const std::string& why) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (error_.empty()) error_ = why;
    }
    cv_.notify_all();
  }
  // Waits up to budget_ms. Throws ConnectivityError on a recorded failure.
  std::optional<Message> pop(double budget_ms) {
    std::unique_lock<std::mutex> lk(mu_);
    auto deadline =
        Clock::now() + std::chrono::milliseconds(long(budget_ms));
    while (q_.empty() && error_.empty()) {
      if (cv_.wait_until(lk, deadline) == std::cv_status::timeout) break;
    }
    if (!error_.empty()) throw ConnectivityError(error_);
    if (q_.empty()) return std::nullopt;
    Message m = std::move(q_.front());
    q_.pop_front();
    return m;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> q_;
  std::string error_;
};

// Full-mesh TCP endpoint for one party: dials every lower id, accepts every
// higher id, HELLOs both ways, then runs one reader thread per connection.
class NodeIo : public Transport {
 public:
  NodeIo(uint16_t id, const SessionConfig& cfg,
         const SocketEndpoints& endpoints, int listen_fd, double timeout_ms)
      : id_(id), cfg_(cfg), endpoints_(endpoints),
        listen_fd_(listen_fd), timeout_ms_(timeout_ms) {
    if (listen_fd_ < 0) {
      auto it = endpoints_.addr.find(id_);
      if (it == endpoints_.addr.end())
        throw ConfigError("no endpoint for party " + std::to_string(id_));
      listen_fd_ =
          bind_listener(it->second.first, it->second.second, nullptr);
    }
  }

  ~NodeIo() override { shutdown(); }

  void connect_mesh() {
    std::vector<uint16_t> ids;
    for (const auto& [pid, ep] : endpoints_.addr)
      if (pid != id_) ids.push_back(pid);

    // Dial everyone below us. connect() completes against the listen
    // backlog, so ordering across nodes cannot deadlock.
    for (uint16_t pid : ids) {
      if (pid >= id_) continue;
      const auto& [host, port] = endpoints_.addr.at(pid);
      int fd = dial(host, port);
      Message hello;
      hello.op = MsgOp::Hello;
      hello.session_id = cfg_.session_id;
      hello.sender = id_;
      auto frame = encode_message(hello);
      write_all(fd, frame.data(), frame.size());
      set_recv_timeout(fd, long(timeout_ms_));
      Message reply = read_frame_blocking(fd, "handshake");
      if (reply.op != MsgOp::Hello || reply.sender != pid) {
        close_quiet(fd);
        throw ConnectivityError("handshake with party " +
                                std::to_string(pid) + " went wrong");
      }
      adopt(pid, fd);
    }
    // Accept everyone above us.
    size_t expect = 0;
    for (uint16_t pid : ids)
      if (pid > id_) ++expect;
    set_recv_timeout(listen_fd_, long(timeout_ms_));
    for (size_t k = 0; k < expect; ++k) {
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0)
        throw ConnectivityError("timed out accepting peer connections");
      set_recv_timeout(fd, long(timeout_ms_));
      Message hello = read_frame_blocking(fd, "handshake");
      if (hello.op != MsgOp::Hello || hello.session_id != cfg_.session_id) {
        close_quiet(fd);
        throw ConnectivityError("bad handshake on inbound connection");
      }
      Message reply;
      reply.op = MsgOp::Hello;
      reply.session_id = cfg_.session_id;
      reply.sender = id_;
      auto frame = encode_message(reply);
      write_all(fd, frame.data(), frame.size());
      adopt(hello.sender, fd);
    }
    // Handshakes done; hand each connection to a reader.
    for (const auto& [pid, fd] : peers_) {
      set_recv_timeout(fd, 200);  // short wakeups to observe stopping_
      readers_.emplace_back([this, fd] { reader_loop(fd); });
    }
  }

  void send(uint16_t from, uint16_t to, const Message& msg) override {
    (void)from;
    auto it = peers_.find(to);
    if (it == peers_.end())
      throw ConnectivityError("no connection to party " + std::to_string(to));
    auto frame = encode_message(msg);
    counters_.record(msg.op, frame.size());
    std::lock_guard<std::mutex> lk(send_mu_);
    write_all(it->second, frame.data(), frame.size());
  }

  std::optional<Message> next() { return inbox_.pop(timeout_ms_); }

  TrafficCounters& counters() { return counters_; }

  void shutdown() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    for (const auto& [pid, fd] : peers_) ::shutdown(fd, SHUT_RDWR);
    for (auto& t : readers_)
      if (t.joinable()) t.join();
    for (const auto& [pid, fd] : peers_) close_quiet(fd);
    close_quiet(listen_fd_);
    peers_.clear();
    listen_fd_ = -1;
  }

 private:
  int dial(const std::string& host, uint16_t port) {
    sockaddr_in sa = parse_endpoint(host, port);
    auto deadline =
        Clock::now() + std::chrono::milliseconds(long(timeout_ms_));
    while (true) {
      int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd < 0)
        throw ConnectivityError("socket(): " + std::string(strerror(errno)));
      if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) == 0) {
        int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        return fd;
      }
      close_quiet(fd);
      if (Clock::now() >= deadline)
        throw ConnectivityError("could not reach " + host + ":" +
                                std::to_string(port) + " before the timeout");
      // The peer may simply not be listening yet.
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }

  void adopt(uint16_t pid, int fd) {
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    if (!peers_.emplace(pid, fd).second) {
      close_quiet(fd);
      throw ConnectivityError("duplicate connection from party " +
                              std::to_string(pid));
    }
  }

  void reader_loop(int fd) {
    std::vector<uint8_t> buf;
    uint8_t chunk[65536];
    while (!stopping_.load()) {
      ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n == 0) return;  // orderly close
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) continue;  // idle link
        if (!stopping_.load())
          inbox_.fail("connection lost: " + std::string(strerror(errno)));
        return;
      }
      buf.insert(buf.end(), chunk, chunk + n);
      size_t off = 0;
      while (true) {
        auto decoded = try_decode_frame(
            std::span<const uint8_t>(buf.data() + off, buf.size() - off));
        if (!decoded) break;
        inbox_.push(std::move(decoded->first));
        off += decoded->second;
      }
      if (off) buf.erase(buf.begin(), buf.begin() + off);
    }
  }

  uint16_t id_;
  SessionConfig cfg_;
  SocketEndpoints endpoints_;
  int listen_fd_;
  double timeout_ms_;
  std::map<uint16_t, int> peers_;
  std::vector<std::thread> readers_;
  Mailbox inbox_;
  std::mutex send_mu_;
  TrafficCounters counters_;
  std::atomic<bool> stopping_{false};
};

}  // namespace

SocketPartyResult run_socket_manager(const SessionConfig& cfg,
                                     const SocketEndpoints& endpoints,
                                     int listen_fd,
                                     std::function<Plan(uint64_t)> plan_factory,
                                     std::unique_ptr<RandomSource> rng,
                                     double timeout_ms) {
  NodeIo io(0, cfg, endpoints, listen_fd, timeout_ms);
  io.connect_mesh();
  Manager manager(cfg, io, std::move(rng));
  while (!manager.ready()) {
    auto msg = io.next();
    if (!msg)
      throw ConnectivityError("timed out waiting for registrations");
    manager.handle(*msg);
    if (manager.aborted()) break;
  }
  if (!manager.aborted()) {
    manager.load_plan(plan_factory(manager.total_rows()));
    manager.begin();
    while (!manager.done() && !manager.aborted()) {
      auto msg = io.next();
      if (!msg)
        throw ConnectivityError(
            "timed out during exercise " +
            std::to_string(manager.exercises_dispatched()));
      manager.handle(*msg);
    }
  }
  SocketPartyResult res;
  res.id = 0;
  res.aborted = manager.aborted();
  res.abort_reason = manager.abort_reason();
  res.polls = manager.poll_results();
  res.total_rows = manager.total_rows();
  res.counters = io.counters();
  io.shutdown();
  return res;
}

SocketPartyResult run_socket_member(
    const SessionConfig& cfg, uint16_t id, const SocketEndpoints& endpoints,
    int listen_fd, std::unique_ptr<RandomSource> rng, uint64_t rows,
    std::map<std::string, u128> private_inputs,
    std::map<std::string, StoredValue> preloaded, double timeout_ms) {
  NodeIo io(id, cfg, endpoints, listen_fd, timeout_ms);
  io.connect_mesh();
  Member member(id, cfg, io, std::move(rng));
  member.set_rows(rows);
  for (const auto& [name, v] : private_inputs) member.set_private(name, v);
  for (const auto& [name, v] : preloaded) member.preload(name, v);
  member.register_with_manager();
  while (!member.session_over()) {
    auto msg = io.next();
    if (!msg)
      throw ConnectivityError("party " + std::to_string(id) +
                              " timed out waiting for traffic");
    member.handle(*msg);
  }
  SocketPartyResult res;
  res.id = id;
  res.store = member.store();
  res.aborted = member.failed();
  res.abort_reason = member.failure();
  res.counters = io.counters();
  io.shutdown();
  return res;
}

SocketSession::SocketSession(const SessionOptions& opt) : opt_(opt) {}

void SocketSession::run(Plan plan) {
  auto shared = std::make_shared<Plan>(std::move(plan));
  run_with_factory([shared](uint64_t) { return *shared; });
}

void SocketSession::run_with_factory(
    std::function<Plan(uint64_t)> plan_factory) {
  const SessionConfig& cfg = opt_.cfg;
  std::vector<uint16_t> ids{0};
  for (uint16_t j = 1; j <= cfg.n; ++j) ids.push_back(j);
  if (cfg.with_client) ids.push_back(cfg.client_id());

  SocketEndpoints eps;
  std::map<uint16_t, int> listeners;
  for (uint16_t id : ids) {
    uint16_t port = 0;
    listeners[id] = bind_listener("127.0.0.1", 0, &port);
    eps.addr[id] = {"127.0.0.1", port};
  }

  std::mutex mu;
  std::map<uint16_t, SocketPartyResult> results;
  std::vector<std::pair<uint16_t, std::exception_ptr>> errors;
  std::vector<std::thread> threads;
  auto started = Clock::now();

  threads.emplace_back([&, this] {
    try {
      auto res = run_socket_manager(cfg, eps, listeners.at(0), plan_factory,
                                    opt_.make_rng(0), opt_.timeout_ms);
      std::lock_guard<std::mutex> lk(mu);
      results[0] = std::move(res);
    } catch (...) {
      std::lock_guard<std::mutex> lk(mu);
      errors.emplace_back(0, std::current_exception());
    }
  });
  for (uint16_t id : ids) {
    if (id == 0) continue;
    threads.emplace_back([&, id, this] {
      try {
        uint64_t rows = 0;
        if (auto it = opt_.rows.find(id); it != opt_.rows.end())
          rows = it->second;
        std::map<std::string, u128> priv;
        if (auto it = opt_.private_inputs.find(id);
            it != opt_.private_inputs.end())
          priv = it->second;
        std::map<std::string, StoredValue> pre;
        if (auto it = opt_.preloaded.find(id); it != opt_.preloaded.end())
          pre = it->second;
        auto res = run_socket_member(cfg, id, eps, listeners.at(id),
                                     opt_.make_rng(id), rows, std::move(priv),
                                     std::move(pre), opt_.timeout_ms);
        std::lock_guard<std::mutex> lk(mu);
        results[id] = std::move(res);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        errors.emplace_back(id, std::current_exception());
      }
    });
  }
  for (auto& t : threads) t.join();

  double elapsed = std::chrono::duration<double, std::milli>(
                       Clock::now() - started)
                       .count();
  results_ = std::move(results);
  aggregate_ = TrafficCounters{};
  for (const auto& [id, res] : results_) aggregate_.merge(res.counters);
  aggregate_.wall_ms = elapsed;

  if (!errors.empty()) std::rethrow_exception(errors.front().second);
  auto mgr = results_.find(0);
  if (mgr == results_.end())
    throw ProtocolError("manager produced no result");
  if (mgr->second.aborted)
    throw ProtocolError("session aborted: " + mgr->second.abort_reason);
}

const SocketPartyResult& SocketSession::party(uint16_t id) const {
  auto it = results_.find(id);
  if (it == results_.end())
    throw ConfigError("no result for party " + std::to_string(id));
  return it->second;
}

u128 SocketSession::reconstruct(const std::string& id) const {
  std::map<uint16_t, const std::map<std::string, StoredValue>*> stores;
  for (const auto& [pid, res] : results_)
    if (pid >= 1 && pid <= opt_.cfg.n) stores[pid] = &res.store;
  return reconstruct_stored(stores, opt_.cfg, id);
}

}  // namespace spnmpc
