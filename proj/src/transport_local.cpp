#include "spnmpc/transport_local.hpp"

#include <algorithm>

#include "spnmpc/errors.hpp"

namespace spnmpc {

InProcHub::InProcHub(double latency_ms) : latency_(latency_ms) {
  if (latency_ms < 0) throw ConfigError("latency must be non-negative");
}

void InProcHub::attach(uint16_t id, std::function<void(const Message&)> sink) {
  if (!sinks_.emplace(id, std::move(sink)).second)
    throw ConfigError("party " + std::to_string(id) + " attached twice");
  clocks_.emplace(id, 0.0);
}

void InProcHub::send(uint16_t from, uint16_t to, const Message& msg) {
  // Round-trip through the wire format so byte counts are honest and any
  // encoding gap shows up in-process, not only under sockets.
  std::vector<uint8_t> frame = encode_message(msg);
  counters_.record(msg.op, frame.size());
  auto decoded = try_decode_frame(frame);
  if (!decoded || decoded->second != frame.size())
    throw ProtocolError("message failed to round-trip its own encoding");
  if (drop_ && drop_(decoded->first, from, to)) return;
  queue_.push(Pending{clocks_[from] + latency_, seq_++, to,
                      std::move(decoded->first)});
}

size_t InProcHub::pump() {
  size_t delivered = 0;
  while (!queue_.empty()) {
    Pending next = queue_.top();
    queue_.pop();
    auto sink = sinks_.find(next.to);
    if (sink == sinks_.end())
      throw ProtocolError("message addressed to unknown party " +
                          std::to_string(next.to));
    double& clock = clocks_[next.to];
    clock = std::max(clock, next.at);
    sink->second(next.msg);
    ++delivered;
  }
  counters_.wall_ms = wall_ms();
  return delivered;
}

double InProcHub::wall_ms() const {
  double w = 0;
  for (const auto& [id, c] : clocks_) w = std::max(w, c);
  return w;
}

LocalSession::LocalSession(const SessionOptions& opt)
    : cfg_(opt.cfg), hub_(opt.latency_ms) {
  manager_ = std::make_unique<Manager>(cfg_, hub_, opt.make_rng(0));
  hub_.attach(0, [this](const Message& m) { manager_->handle(m); });

  std::vector<uint16_t> ids;
  for (uint16_t j = 1; j <= cfg_.n; ++j) ids.push_back(j);
  if (cfg_.with_client) ids.push_back(cfg_.client_id());
  for (uint16_t id : ids) {
    auto m = std::make_unique<Member>(id, cfg_, hub_, opt.make_rng(id));
    auto rows = opt.rows.find(id);
    if (rows != opt.rows.end()) m->set_rows(rows->second);
    auto priv = opt.private_inputs.find(id);
    if (priv != opt.private_inputs.end())
      for (const auto& [name, v] : priv->second) m->set_private(name, v);
    auto pre = opt.preloaded.find(id);
    if (pre != opt.preloaded.end())
      for (const auto& [name, v] : pre->second) m->preload(name, v);
    Member* raw = m.get();
    hub_.attach(id, [raw](const Message& msg) { raw->handle(msg); });
    members_.push_back(std::move(m));
  }
}

Member& LocalSession::member(uint16_t id) {
  for (auto& m : members_)
    if (m->id() == id) return *m;
  throw ConfigError("no member with id " + std::to_string(id));
}

const Member& LocalSession::member(uint16_t id) const {
  for (const auto& m : members_)
    if (m->id() == id) return *m;
  throw ConfigError("no member with id " + std::to_string(id));
}

void LocalSession::run(Plan plan) {
  manager_->load_plan(std::move(plan));
  for (auto& m : members_) m->register_with_manager();
  hub_.pump();
  if (!manager_->ready())
    throw ProtocolError("registration did not complete");
  manager_->begin();
  hub_.pump();
  if (manager_->aborted())
    throw ProtocolError("session aborted: " + manager_->abort_reason());
  if (!manager_->done()) {
    std::string dump = "deadlock: transport quiescent";
    if (manager_->in_flight()) {
      const Exercise& ex = *manager_->in_flight();
      dump += " during exercise " + std::to_string(ex.id) + " (" +
              ex_op_name(ex.op) + " -> " + ex.result + "), waiting on parties";
      for (uint16_t id : manager_->waiting_on())
        dump += " " + std::to_string(id);
    }
    throw ProtocolError(dump);
  }
}

bool LocalSession::anyone_holds(const std::string& id) const {
  for (const auto& m : members_)
    if (m->store().count(id)) return true;
  return false;
}

u128 LocalSession::reconstruct(const std::string& id) const {
  std::map<uint16_t, const std::map<std::string, StoredValue>*> stores;
  for (const auto& m : members_)
    if (m->id() >= 1 && m->id() <= cfg_.n) stores[m->id()] = &m->store();
  return reconstruct_stored(stores, cfg_, id);
}

}  // namespace spnmpc
