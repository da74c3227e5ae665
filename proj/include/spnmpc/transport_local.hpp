#pragma once

#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "spnmpc/party.hpp"

namespace spnmpc {

// Single-threaded message hub with virtual time. Every send is serialized,
// counted against the real wire format, decoded back and queued for delivery
// at sender_clock + latency; delivery order is (time, send sequence). A
// party's clock advances to the delivery time of each message it consumes,
// so the maximum clock is the simulated wall time of the run.
class InProcHub : public Transport {
 public:
  explicit InProcHub(double latency_ms);

  void attach(uint16_t id, std::function<void(const Message&)> sink);
  void send(uint16_t from, uint16_t to, const Message& msg) override;

  // Delivers until no messages remain; returns how many were delivered.
  size_t pump();
  bool idle() const { return queue_.empty(); }

  TrafficCounters& counters() { return counters_; }
  const TrafficCounters& counters() const { return counters_; }
  double wall_ms() const;

  // Fault injection: messages matching the filter are counted as sent but
  // never delivered.
  void set_drop_filter(
      std::function<bool(const Message&, uint16_t from, uint16_t to)> f) {
    drop_ = std::move(f);
  }

 private:
  struct Pending {
    double at;
    uint64_t seq;
    uint16_t to;
    Message msg;
  };
  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  double latency_;
  uint64_t seq_ = 0;
  std::map<uint16_t, std::function<void(const Message&)>> sinks_;
  std::map<uint16_t, double> clocks_;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  TrafficCounters counters_;
  std::function<bool(const Message&, uint16_t, uint16_t)> drop_;
};

// One full session run on the in-process transport: manager, n members and
// an optional client wired through an InProcHub. Deterministic for a fixed
// SessionOptions.
class LocalSession {
 public:
  explicit LocalSession(const SessionOptions& opt);

  // Registers everyone, loads the plan, runs it to completion. Throws
  // ProtocolError on abort or deadlock (quiescence before SESSION_DONE).
  void run(Plan plan);

  InProcHub& hub() { return hub_; }
  Manager& manager() { return *manager_; }
  Member& member(uint16_t id);
  const Member& member(uint16_t id) const;

  const TrafficCounters& counters() const { return hub_.counters(); }

  // Debug reconstruction across member stores; understands all three kinds.
  // Throws ProtocolError when no member holds the id or kinds disagree.
  u128 reconstruct(const std::string& id) const;
  bool anyone_holds(const std::string& id) const;

 private:
  SessionConfig cfg_;
  InProcHub hub_;
  std::unique_ptr<Manager> manager_;
  std::vector<std::unique_ptr<Member>> members_;  // 1..n then client
};

}  // namespace spnmpc
