#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "spnmpc/party.hpp"

namespace spnmpc {

// host:port per party id. Port 0 is only meaningful for pre-bound listeners
// created by SocketSession; file-driven meshes need concrete ports.
struct SocketEndpoints {
  std::map<uint16_t, std::pair<std::string, uint16_t>> addr;
};

// Outcome of one party process/thread after its event loop exits.
struct SocketPartyResult {
  uint16_t id = 0;
  std::map<std::string, StoredValue> store;
  TrafficCounters counters;
  bool aborted = false;
  std::string abort_reason;
  // Manager only:
  std::map<std::string, bool> polls;
  uint64_t total_rows = 0;
};

// Runs one party over a real TCP mesh: party i accepts connections from
// every id above it and dials every id below it, then exchanges HELLO frames
// so both sides know who they are talking to. Each connection gets a reader
// thread feeding a single inbox; the caller's state machine runs on the
// invoking thread. listen_fd < 0 binds from the endpoint table.
//
// The manager variant builds its plan only after all registrations arrived,
// because plans may depend on the registered row total.
SocketPartyResult run_socket_manager(const SessionConfig& cfg,
                                     const SocketEndpoints& endpoints,
                                     int listen_fd,
                                     std::function<Plan(uint64_t)> plan_factory,
                                     std::unique_ptr<RandomSource> rng,
                                     double timeout_ms);

SocketPartyResult run_socket_member(
    const SessionConfig& cfg, uint16_t id, const SocketEndpoints& endpoints,
    int listen_fd, std::unique_ptr<RandomSource> rng, uint64_t rows,
    std::map<std::string, u128> private_inputs,
    std::map<std::string, StoredValue> preloaded, double timeout_ms);

// Whole-session convenience: binds every listener on 127.0.0.1 with
// ephemeral ports, runs the manager, all members and the optional client on
// threads in this process, and joins them. Intended for tests and the CLI
// simulator path; distributed deployments call the per-party runners above.
class SocketSession {
 public:
  explicit SocketSession(const SessionOptions& opt);

  void run(Plan plan);
  void run_with_factory(std::function<Plan(uint64_t)> plan_factory);

  const SocketPartyResult& party(uint16_t id) const;
  const TrafficCounters& counters() const { return aggregate_; }
  const SocketPartyResult& manager_result() const { return party(0); }

  u128 reconstruct(const std::string& id) const;

 private:
  SessionOptions opt_;
  std::map<uint16_t, SocketPartyResult> results_;
  TrafficCounters aggregate_;
};

}  // namespace spnmpc
