#include "spnmpc/party.hpp"

#include <algorithm>

#include "spnmpc/errors.hpp"

namespace spnmpc {

const char* value_kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::Public:
      return "public";
    case ValueKind::PolyShare:
      return "poly-share";
    case ValueKind::AddShare:
      return "add-share";
  }
  return "?";
}

void TrafficCounters::record(MsgOp op, size_t frame_bytes) {
  messages += 1;
  bytes += frame_bytes;
  op_messages[op] += 1;
  op_bytes[op] += frame_bytes;
}

void TrafficCounters::merge(const TrafficCounters& other) {
  messages += other.messages;
  bytes += other.bytes;
  for (const auto& [op, c] : other.op_messages) op_messages[op] += c;
  for (const auto& [op, c] : other.op_bytes) op_bytes[op] += c;
  wall_ms = std::max(wall_ms, other.wall_ms);
}

uint64_t TrafficCounters::data_messages() const {
  uint64_t total = 0;
  for (MsgOp op : {MsgOp::ShareDist, MsgOp::MulReshare, MsgOp::RevealTo,
                   MsgOp::JrszDeal, MsgOp::Flag}) {
    auto it = op_messages.find(op);
    if (it != op_messages.end()) total += it->second;
  }
  return total;
}

namespace {

// Result kind of x + y / x - y, or nullopt when the combination is not a
// valid sharing (mixing additive shares with anything else shifts the secret
// by a per-party constant, which reconstructs to garbage times n).
std::optional<ValueKind> combine_kind(ValueKind a, ValueKind b) {
  if (a == ValueKind::AddShare || b == ValueKind::AddShare) {
    if (a == b) return ValueKind::AddShare;
    return std::nullopt;
  }
  if (a == ValueKind::PolyShare || b == ValueKind::PolyShare)
    return ValueKind::PolyShare;
  return ValueKind::Public;
}

Message make_msg(MsgOp op, uint64_t exercise_id, uint64_t session_id,
                 uint16_t sender, std::string secret_id,
                 std::vector<u128> values) {
  Message m;
  m.op = op;
  m.exercise_id = exercise_id;
  m.session_id = session_id;
  m.sender = sender;
  m.secret_id = std::move(secret_id);
  m.values = std::move(values);
  return m;
}

}  // namespace

Member::Member(uint16_t id, const SessionConfig& cfg, Transport& transport,
               std::unique_ptr<RandomSource> rng)
    : id_(id),
      cfg_(cfg),
      transport_(transport),
      rng_(std::move(rng)),
      is_client_(id == cfg.client_id()) {
  if (id_ == 0 || (id_ > cfg_.n && !is_client_))
    throw ConfigError("member id out of range");
  if (!rng_) throw ConfigError("member needs a randomness source");
}

void Member::set_private(const std::string& name, u128 value) {
  private_[name] = value;
}

void Member::preload(const std::string& name, StoredValue v) {
  bind(name, v);
}

void Member::register_with_manager() {
  send(0, make_msg(MsgOp::Register, 0, cfg_.session_id, id_, "",
                   {static_cast<u128>(rows_)}));
}

void Member::send(uint16_t to, Message msg) {
  transport_.send(id_, to, msg);
}

void Member::bind(const std::string& name, StoredValue v) {
  auto [it, inserted] = store_.emplace(name, v);
  if (!inserted)
    throw ProtocolError("result id rebound: " + name + " already holds a " +
                        value_kind_name(it->second.kind));
}

const StoredValue* Member::lookup(const std::string& name) const {
  auto it = store_.find(name);
  return it == store_.end() ? nullptr : &it->second;
}

void Member::handle(const Message& msg) {
  if (session_over_) return;
  if (msg.op == MsgOp::Abort) {
    session_over_ = true;
    failed_ = true;
    if (failure_.empty()) failure_ = "session aborted by manager";
    return;
  }
  if (msg.op == MsgOp::SessionDone) {
    session_over_ = true;
    return;
  }
  if (failed_) return;
  if (msg.session_id != cfg_.session_id) {
    nack("session id mismatch");
    return;
  }
  switch (msg.op) {
    case MsgOp::Exec:
      if (!msg.exercise) {
        nack("EXEC without an exercise body");
        return;
      }
      start_exercise(*msg.exercise);
      return;
    case MsgOp::ShareDist:
    case MsgOp::MulReshare:
    case MsgOp::RevealTo:
    case MsgOp::JrszDeal:
      if (current_ && msg.exercise_id == current_->id) {
        on_data(msg);
      } else {
        // Data can outrun its EXEC when senders share no link with the
        // manager; park it until the exercise starts.
        early_[msg.exercise_id].push_back(msg);
      }
      return;
    default:
      // Control traffic not addressed to members is dropped silently.
      return;
  }
}

void Member::start_exercise(const Exercise& ex) {
  if (current_) {
    nack("exercise dispatched while another is in flight");
    return;
  }
  current_ = ex;
  slots_.clear();
  try {
    switch (ex.op) {
      case ExOp::StorePublic:
      case ExOp::Add:
      case ExOp::Sub:
      case ExOp::ScalePublic:
      case ExOp::PublicMinus:
        exec_local_arith(ex);
        break;
      case ExOp::DealPrivate:
        exec_deal_private(ex);
        break;
      case ExOp::DealMask:
        exec_deal_mask(ex);
        break;
      case ExOp::DealMod:
        exec_deal_mod(ex);
        break;
      case ExOp::RevealTo:
        exec_reveal_to(ex);
        break;
      case ExOp::MulReshare:
        exec_mul_reshare(ex);
        break;
      case ExOp::Jrsz:
        break;  // wait for the manager's JRSZ_DEAL
      case ExOp::Sq2Pq:
        exec_sq2pq(ex);
        break;
      case ExOp::ApproxMaskShare:
        exec_approx_mask(ex);
        break;
      case ExOp::ZeroPoll:
        exec_zero_poll(ex);
        break;
    }
  } catch (const Error& e) {
    nack(e.what());
    return;
  }
  if (!current_) return;  // completed locally
  // Replay anything that arrived before the EXEC did.
  auto it = early_.find(ex.id);
  if (it != early_.end()) {
    auto pending = std::move(it->second);
    early_.erase(it);
    for (const auto& msg : pending) {
      if (!current_) break;
      on_data(msg);
    }
  }
}

void Member::finish() {
  if (!current_) return;
  send(0, make_msg(MsgOp::Finished, current_->id, cfg_.session_id, id_,
                   current_->result, {}));
  current_.reset();
  slots_.clear();
}

void Member::nack(const std::string& reason) {
  failed_ = true;
  failure_ = reason;
  uint64_t eid = current_ ? current_->id : 0;
  send(0, make_msg(MsgOp::Nack, eid, cfg_.session_id, id_, reason, {}));
  current_.reset();
  slots_.clear();
}

namespace {
const StoredValue& require_stored(const std::map<std::string, StoredValue>& s,
                                  const std::string& name) {
  auto it = s.find(name);
  if (it == s.end()) throw ProtocolError("no stored value named " + name);
  return it->second;
}
}  // namespace

void Member::exec_local_arith(const Exercise& ex) {
  const u128 p = cfg_.field.modulus();
  switch (ex.op) {
    case ExOp::StorePublic:
      bind(ex.result, {ValueKind::Public, ex.c0 % p});
      break;
    case ExOp::Add:
    case ExOp::Sub: {
      if (ex.args.size() != 2)
        throw ProtocolError("ADD/SUB needs two operands");
      const StoredValue& a = require_stored(store_, ex.args[0]);
      const StoredValue& b = require_stored(store_, ex.args[1]);
      auto kind = combine_kind(a.kind, b.kind);
      if (!kind)
        throw ProtocolError(std::string("cannot combine ") +
                            value_kind_name(a.kind) + " with " +
                            value_kind_name(b.kind));
      u128 v = ex.op == ExOp::Add ? add_mod(a.value, b.value, p)
                                  : sub_mod(a.value, b.value, p);
      bind(ex.result, {*kind, v});
      break;
    }
    case ExOp::ScalePublic: {
      if (ex.args.size() != 1)
        throw ProtocolError("SCALE_PUBLIC needs one operand");
      const StoredValue& a = require_stored(store_, ex.args[0]);
      bind(ex.result, {a.kind, mul_mod(ex.c0 % p, a.value, p)});
      break;
    }
    case ExOp::PublicMinus: {
      if (ex.args.size() != 1)
        throw ProtocolError("PUBLIC_MINUS needs one operand");
      const StoredValue& a = require_stored(store_, ex.args[0]);
      if (a.kind == ValueKind::AddShare)
        throw ProtocolError(
            "PUBLIC_MINUS on additive shares would shift the secret n times");
      bind(ex.result, {a.kind, sub_mod(ex.c0 % p, a.value, p)});
      break;
    }
    default:
      break;
  }
  finish();
}

void Member::deal_shares(const std::string& secret_id, u128 value) {
  auto shares = shamir_share(cfg_.field.element(value), cfg_.sharing(), *rng_,
                             secret_id);
  for (const auto& sh : shares) {
    if (sh.owner.value == id_) {
      bind(secret_id, {ValueKind::PolyShare, sh.value.value()});
    } else {
      send(sh.owner.value,
           make_msg(MsgOp::ShareDist, current_->id, cfg_.session_id, id_,
                    secret_id, {sh.value.value()}));
    }
  }
}

void Member::exec_deal_private(const Exercise& ex) {
  if (ex.args.size() != 1)
    throw ProtocolError("DEAL_PRIVATE needs the private input name");
  if (ex.who == id_) {
    auto it = private_.find(ex.args[0]);
    if (it == private_.end())
      throw ProtocolError("missing private input " + ex.args[0]);
    deal_shares(ex.result, it->second);
    finish();
  }
  // Receivers complete in try_complete once the dealer's share lands.
}

void Member::exec_deal_mask(const Exercise& ex) {
  if (ex.who != id_) return;
  if (ex.c0 == 0 || ex.c0 > 120)
    throw ProtocolError("mask bit width out of range");
  if (ex.c1 < 2) throw ProtocolError("mask modulus must be at least 2");
  u128 r = sample_bounded(static_cast<u128>(1) << static_cast<unsigned>(ex.c0),
                          *rng_);
  u128 q = r % ex.c1;
  deal_shares(ex.result + ".r", r);
  deal_shares(ex.result + ".q", q);
  finish();
}

void Member::exec_deal_mod(const Exercise& ex) {
  if (ex.args.size() != 1) throw ProtocolError("DEAL_MOD needs one operand");
  if (ex.who != id_) return;
  const StoredValue& z = require_stored(store_, ex.args[0]);
  if (z.kind != ValueKind::Public)
    throw ProtocolError("DEAL_MOD input must be a revealed public value");
  if (ex.c0 < 2) throw ProtocolError("modulus must be at least 2");
  deal_shares(ex.result, z.value % ex.c0);
  finish();
}

void Member::exec_reveal_to(const Exercise& ex) {
  if (ex.args.size() != 1) throw ProtocolError("REVEAL_TO needs one operand");
  if (ex.who != id_) {
    const StoredValue& x = require_stored(store_, ex.args[0]);
    if (x.kind == ValueKind::AddShare)
      throw ProtocolError("additive shares need SQ2PQ before a reveal");
    send(ex.who, make_msg(MsgOp::RevealTo, ex.id, cfg_.session_id, id_,
                          ex.args[0], {x.value}));
    finish();
    return;
  }
  if (!is_client_) {
    const StoredValue& own = require_stored(store_, ex.args[0]);
    if (own.kind == ValueKind::AddShare)
      throw ProtocolError("additive shares need SQ2PQ before a reveal");
    slots_[ex.args[0]][id_] = own.value;
    try_complete();
  }
}

void Member::exec_mul_reshare(const Exercise& ex) {
  if (ex.args.size() != 2)
    throw ProtocolError("MUL_RESHARE needs two operands");
  const StoredValue& a = require_stored(store_, ex.args[0]);
  const StoredValue& b = require_stored(store_, ex.args[1]);
  if (a.kind == ValueKind::AddShare || b.kind == ValueKind::AddShare)
    throw ProtocolError("MUL_RESHARE operands must be polynomial or public");
  // Local product of degree-t points is a point on a degree-2t polynomial
  // whose constant term is the product; resharing brings the degree back.
  u128 h = mul_mod(a.value, b.value, cfg_.field.modulus());
  auto subs = shamir_share(cfg_.field.element(h), cfg_.sharing(), *rng_,
                           ex.result);
  for (const auto& sh : subs) {
    if (sh.owner.value == id_) {
      slots_[ex.result][id_] = sh.value.value();
    } else {
      send(sh.owner.value,
           make_msg(MsgOp::MulReshare, ex.id, cfg_.session_id, id_, ex.result,
                    {sh.value.value()}));
    }
  }
  try_complete();
}

void Member::exec_sq2pq(const Exercise& ex) {
  if (ex.args.size() != 1) throw ProtocolError("SQ2PQ needs one operand");
  const StoredValue& a = require_stored(store_, ex.args[0]);
  if (a.kind != ValueKind::AddShare)
    throw ProtocolError("SQ2PQ input must be an additive share");
  AdditiveShare mine{ex.args[0], PartyId{id_},
                     cfg_.field.element(a.value)};
  auto spread = sq2pq_spread(mine, cfg_.sharing(), *rng_);
  for (const auto& sh : spread) {
    if (sh.owner.value == id_) {
      slots_[ex.result][id_] = sh.value.value();
    } else {
      send(sh.owner.value,
           make_msg(MsgOp::ShareDist, ex.id, cfg_.session_id, id_, ex.result,
                    {sh.value.value()}));
    }
  }
  try_complete();
}

void Member::exec_approx_mask(const Exercise& ex) {
  if (ex.args.size() != 3)
    throw ProtocolError(
        "APPROX_MASK_SHARE needs numerator, denominator and mask");
  auto num_it = private_.find(ex.args[0]);
  auto den_it = private_.find(ex.args[1]);
  if (num_it == private_.end() || den_it == private_.end())
    throw ProtocolError("missing private statistics for " + ex.result);
  const StoredValue& mask = require_stored(store_, ex.args[2]);
  if (mask.kind != ValueKind::AddShare)
    throw ProtocolError("mask must be an additive share of zero");
  if (den_it->second == 0)
    throw ProtocolError("zero local denominator behind " + ex.result);
  if (ex.c1 == 0) throw ProtocolError("party count constant missing");
  // Round-half-up of (c0 * num) / (c1 * den) in exact integer arithmetic.
  u128 a = ex.c0 * num_it->second;
  u128 b = ex.c1 * den_it->second;
  u128 f = (2 * a + b) / (2 * b);
  const u128 p = cfg_.field.modulus();
  bind(ex.result, {ValueKind::AddShare, add_mod(f % p, mask.value, p)});
  finish();
}

void Member::exec_zero_poll(const Exercise& ex) {
  if (ex.args.size() != 1)
    throw ProtocolError("ZERO_POLL needs the private input name");
  auto it = private_.find(ex.args[0]);
  if (it == private_.end())
    throw ProtocolError("missing private input " + ex.args[0]);
  u128 flag = it->second == 0 ? 1 : 0;
  send(0, make_msg(MsgOp::Flag, ex.id, cfg_.session_id, id_, ex.result,
                   {flag}));
  finish();
}

void Member::on_data(const Message& msg) {
  if (msg.values.size() != 1) {
    nack("data message must carry exactly one element");
    return;
  }
  auto& per_sender = slots_[msg.secret_id];
  auto [it, inserted] = per_sender.emplace(msg.sender, msg.values[0]);
  if (!inserted) {
    nack("duplicate share from party " + std::to_string(msg.sender) +
         " for " + msg.secret_id);
    return;
  }
  try {
    try_complete();
  } catch (const Error& e) {
    nack(e.what());
  }
}

void Member::try_complete() {
  if (!current_) return;
  const Exercise& ex = *current_;
  const u128 p = cfg_.field.modulus();
  switch (ex.op) {
    case ExOp::DealPrivate:
    case ExOp::DealMod: {
      auto it = slots_.find(ex.result);
      if (it == slots_.end() || !it->second.count(ex.who)) return;
      bind(ex.result, {ValueKind::PolyShare, it->second.at(ex.who)});
      finish();
      return;
    }
    case ExOp::DealMask: {
      auto r = slots_.find(ex.result + ".r");
      auto q = slots_.find(ex.result + ".q");
      if (r == slots_.end() || !r->second.count(ex.who)) return;
      if (q == slots_.end() || !q->second.count(ex.who)) return;
      bind(ex.result + ".r", {ValueKind::PolyShare, r->second.at(ex.who)});
      bind(ex.result + ".q", {ValueKind::PolyShare, q->second.at(ex.who)});
      finish();
      return;
    }
    case ExOp::Jrsz: {
      auto it = slots_.find(ex.result);
      if (it == slots_.end() || !it->second.count(0)) return;
      bind(ex.result, {ValueKind::AddShare, it->second.at(0)});
      finish();
      return;
    }
    case ExOp::RevealTo: {
      if (ex.who != id_) return;
      auto it = slots_.find(ex.args[0]);
      if (it == slots_.end() || it->second.size() < cfg_.n) return;
      std::vector<PolynomialShare> pts;
      pts.reserve(it->second.size());
      for (const auto& [sender, v] : it->second)
        pts.push_back({ex.args[0], PartyId{sender}, cfg_.field.element(v)});
      FieldElement secret = lagrange_reconstruct(pts, cfg_.sharing());
      bind(ex.result, {ValueKind::Public, secret.value()});
      finish();
      return;
    }
    case ExOp::MulReshare: {
      auto it = slots_.find(ex.result);
      if (it == slots_.end() || it->second.size() < cfg_.n) return;
      std::vector<uint16_t> xs;
      xs.reserve(cfg_.n);
      for (const auto& kv : it->second) xs.push_back(kv.first);
      auto weights = lagrange_weights_at_zero(xs, cfg_.field);
      u128 acc = 0;
      size_t i = 0;
      for (const auto& [sender, v] : it->second) {
        acc = add_mod(acc, mul_mod(weights[i].value(), v, p), p);
        ++i;
      }
      bind(ex.result, {ValueKind::PolyShare, acc});
      finish();
      return;
    }
    case ExOp::Sq2Pq: {
      auto it = slots_.find(ex.result);
      if (it == slots_.end() || it->second.size() < cfg_.n) return;
      std::vector<PolynomialShare> recv;
      recv.reserve(it->second.size());
      for (const auto& [sender, v] : it->second)
        recv.push_back({ex.result, PartyId{id_}, cfg_.field.element(v)});
      PolynomialShare mine = sq2pq_combine(recv, cfg_.sharing());
      bind(ex.result, {ValueKind::PolyShare, mine.value.value()});
      finish();
      return;
    }
    default:
      return;
  }
}

Manager::Manager(const SessionConfig& cfg, Transport& transport,
                 std::unique_ptr<RandomSource> rng)
    : cfg_(cfg), transport_(transport), rng_(std::move(rng)) {
  if (!rng_) throw ConfigError("manager needs a randomness source");
}

void Manager::collect_result_ids(const std::vector<PlanItem>& items,
                                 std::map<std::string, bool>& seen) {
  auto reserve = [&seen](const std::string& id) {
    if (id.empty()) throw ProtocolError("exercise without a result id");
    if (!seen.emplace(id, true).second)
      throw ProtocolError("duplicate result id in plan: " + id);
  };
  for (const auto& item : items) {
    if (item.kind == PlanItem::Kind::Step) {
      if (item.step.op == ExOp::DealMask) {
        reserve(item.step.result + ".r");
        reserve(item.step.result + ".q");
      } else {
        reserve(item.step.result);
      }
    } else {
      // Branch arms are mutually exclusive; ids may repeat across arms but
      // everything either arm binds stays reserved downstream.
      auto a = seen;
      collect_result_ids(item.all_zero, a);
      auto b = seen;
      collect_result_ids(item.otherwise, b);
      for (const auto& [id, v] : a) seen[id] = v;
      for (const auto& [id, v] : b) seen[id] = v;
    }
  }
}

void Manager::load_plan(Plan plan) {
  if (started_) throw ProtocolError("plan loaded after session start");
  std::map<std::string, bool> seen;
  collect_result_ids(plan.items, seen);
  queue_.assign(std::make_move_iterator(plan.items.begin()),
                std::make_move_iterator(plan.items.end()));
}

bool Manager::ready() const {
  size_t expected = cfg_.n + (cfg_.with_client ? 1 : 0);
  return registered_.size() == expected;
}

void Manager::begin() {
  if (started_) throw ProtocolError("session already started");
  if (!ready()) throw ProtocolError("registration incomplete");
  started_ = true;
  dispatch_next();
}

void Manager::broadcast(Message msg, bool include_client) {
  for (uint16_t j = 1; j <= cfg_.n; ++j) transport_.send(0, j, msg);
  if (include_client && cfg_.with_client)
    transport_.send(0, cfg_.client_id(), msg);
}

void Manager::abort_session(const std::string& reason) {
  if (aborted_) return;
  aborted_ = true;
  abort_reason_ = reason;
  queue_.clear();
  in_flight_.reset();
  broadcast(make_msg(MsgOp::Abort, 0, cfg_.session_id, 0, reason, {}), true);
}

void Manager::dispatch_next() {
  while (!queue_.empty() && queue_.front().kind == PlanItem::Kind::Branch) {
    PlanItem branch = std::move(queue_.front());
    queue_.pop_front();
    auto it = polls_.find(branch.poll_id);
    if (it == polls_.end()) {
      abort_session("branch on " + branch.poll_id + " before its poll ran");
      return;
    }
    auto& taken = it->second ? branch.all_zero : branch.otherwise;
    queue_.insert(queue_.begin(), std::make_move_iterator(taken.begin()),
                  std::make_move_iterator(taken.end()));
  }
  if (queue_.empty()) {
    done_ = true;
    broadcast(make_msg(MsgOp::SessionDone, 0, cfg_.session_id, 0, "", {}),
              true);
    return;
  }
  Exercise ex = std::move(queue_.front().step);
  queue_.pop_front();
  ex.id = ++next_exercise_id_;
  finished_.clear();
  flags_.clear();
  in_flight_ = ex;
  in_flight_includes_client_ =
      cfg_.with_client && ex.who == cfg_.client_id();
  Message exec = make_msg(MsgOp::Exec, ex.id, cfg_.session_id, 0, "", {});
  exec.exercise = ex;
  broadcast(exec, in_flight_includes_client_);
  if (ex.op == ExOp::Jrsz) {
    auto masks = jrsz_deal(cfg_.sharing(), *rng_, ex.result);
    for (const auto& m : masks)
      transport_.send(0, m.owner.value,
                      make_msg(MsgOp::JrszDeal, ex.id, cfg_.session_id, 0,
                               ex.result, {m.value.value()}));
  }
}

void Manager::handle(const Message& msg) {
  if (aborted_ || done_) return;
  if (msg.session_id != cfg_.session_id) {
    abort_session("session id mismatch from party " +
                  std::to_string(msg.sender));
    return;
  }
  switch (msg.op) {
    case MsgOp::Register: {
      if (started_) {
        abort_session("late registration from party " +
                      std::to_string(msg.sender));
        return;
      }
      if (registered_.count(msg.sender)) {
        abort_session("duplicate registration from party " +
                      std::to_string(msg.sender));
        return;
      }
      registered_[msg.sender] = true;
      if (!msg.values.empty())
        total_rows_ += static_cast<uint64_t>(msg.values[0]);
      return;
    }
    case MsgOp::Nack:
      abort_session("party " + std::to_string(msg.sender) +
                    " rejected exercise " + std::to_string(msg.exercise_id) +
                    ": " + msg.secret_id);
      return;
    case MsgOp::Flag: {
      if (!in_flight_ || msg.exercise_id != in_flight_->id ||
          in_flight_->op != ExOp::ZeroPoll) {
        abort_session("unexpected flag from party " +
                      std::to_string(msg.sender));
        return;
      }
      flags_[msg.sender] = msg.values.empty() ? 0 : msg.values[0];
      return;
    }
    case MsgOp::Finished: {
      if (!in_flight_ || msg.exercise_id != in_flight_->id) {
        abort_session("stray FINISHED from party " +
                      std::to_string(msg.sender));
        return;
      }
      finished_[msg.sender] = true;
      size_t expected = cfg_.n + (in_flight_includes_client_ ? 1 : 0);
      if (finished_.size() < expected) return;
      if (in_flight_->op == ExOp::ZeroPoll) {
        if (flags_.size() != cfg_.n) {
          abort_session("poll finished with missing flags");
          return;
        }
        bool all_zero = true;
        for (const auto& [sender, f] : flags_) all_zero = all_zero && f != 0;
        polls_[in_flight_->result] = all_zero;
      }
      in_flight_.reset();
      dispatch_next();
      return;
    }
    default:
      return;  // HELLO and data traffic never target the manager
  }
}

std::vector<uint16_t> Manager::waiting_on() const {
  std::vector<uint16_t> out;
  if (!in_flight_) return out;
  for (uint16_t j = 1; j <= cfg_.n; ++j)
    if (!finished_.count(j)) out.push_back(j);
  if (in_flight_includes_client_ && !finished_.count(cfg_.client_id()))
    out.push_back(cfg_.client_id());
  return out;
}

u128 reconstruct_stored(
    const std::map<uint16_t, const std::map<std::string, StoredValue>*>&
        stores,
    const SessionConfig& cfg, const std::string& id) {
  std::vector<PolynomialShare> poly;
  std::vector<u128> additive;
  std::vector<u128> public_copies;
  for (const auto& [pid, store] : stores) {
    if (pid == 0 || pid > cfg.n) continue;  // only members hold shares
    auto it = store->find(id);
    if (it == store->end()) continue;
    switch (it->second.kind) {
      case ValueKind::Public:
        public_copies.push_back(it->second.value);
        break;
      case ValueKind::PolyShare:
        poly.push_back(
            {id, PartyId{pid}, cfg.field.element(it->second.value)});
        break;
      case ValueKind::AddShare:
        additive.push_back(it->second.value);
        break;
    }
  }
  size_t kinds_present = (poly.empty() ? 0 : 1) + (additive.empty() ? 0 : 1) +
                         (public_copies.empty() ? 0 : 1);
  if (kinds_present == 0) throw ProtocolError("no member holds " + id);
  if (kinds_present > 1)
    throw ProtocolError("mixed share kinds stored under " + id);
  if (!poly.empty()) {
    if (poly.size() < static_cast<size_t>(cfg.t) + 1)
      throw ProtocolError("not enough shares to open " + id);
    return lagrange_reconstruct(poly, cfg.sharing()).value();
  }
  if (!additive.empty()) {
    if (additive.size() != cfg.n)
      throw ProtocolError("additive opening of " + id + " needs all parties");
    u128 acc = 0;
    for (u128 v : additive) acc = add_mod(acc, v, cfg.field.modulus());
    return acc;
  }
  for (u128 v : public_copies)
    if (v != public_copies.front())
      throw ProtocolError("public copies of " + id + " disagree");
  return public_copies.front();
}

std::unique_ptr<RandomSource> SessionOptions::make_rng(uint16_t party) const {
  auto seeded = std::make_unique<SeededRandom>(derive_seed(master_seed, party));
  auto tape = tapes.find(party);
  if (tape == tapes.end()) return seeded;
  return std::make_unique<ScriptedRandom>(tape->second, std::move(seeded));
}

uint64_t expected_data_messages(const Exercise& ex, uint16_t n,
                                uint16_t client_id) {
  const uint64_t nn = n;
  switch (ex.op) {
    case ExOp::StorePublic:
    case ExOp::Add:
    case ExOp::Sub:
    case ExOp::ScalePublic:
    case ExOp::PublicMinus:
    case ExOp::ApproxMaskShare:
      return 0;
    case ExOp::DealPrivate:
      return ex.who == client_id ? nn : nn - 1;
    case ExOp::DealMask:
      return 2 * (nn - 1);
    case ExOp::DealMod:
      return nn - 1;
    case ExOp::RevealTo:
      return ex.who == client_id ? nn : nn - 1;
    case ExOp::MulReshare:
      return nn * (nn - 1);
    case ExOp::Jrsz:
      return nn;
    case ExOp::Sq2Pq:
      return nn * (nn - 1);
    case ExOp::ZeroPoll:
      return nn;
  }
  return 0;
}

}  // namespace spnmpc
