#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spnmpc/field.hpp"
#include "spnmpc/fixed_point.hpp"
#include "spnmpc/random.hpp"
#include "spnmpc/sharing.hpp"
#include "spnmpc/wire.hpp"

namespace spnmpc {

// How a stored field element is shared. Public values are held identically
// by everyone, polynomial shares sit on a degree-t curve, additive shares
// sum to the secret. The arithmetic rules per kind live in the member.
enum class ValueKind : uint8_t { Public, PolyShare, AddShare };

struct StoredValue {
  ValueKind kind = ValueKind::Public;
  u128 value = 0;
  friend bool operator==(const StoredValue&, const StoredValue&) = default;
};

const char* value_kind_name(ValueKind kind);

// Per-opcode traffic accounting. Bytes are measured against the binary
// framing, so totals are only meaningful relative to this codebase.
struct TrafficCounters {
  uint64_t messages = 0;
  uint64_t bytes = 0;
  std::map<MsgOp, uint64_t> op_messages;
  std::map<MsgOp, uint64_t> op_bytes;
  double wall_ms = 0.0;

  void record(MsgOp op, size_t frame_bytes);
  void merge(const TrafficCounters& other);
  uint64_t data_messages() const;  // everything except control traffic
};

// Session-wide public parameters. Party ids: 0 is the manager, 1..n are the
// share-holding members, n+1 is the inference client when present.
struct SessionConfig {
  uint64_t session_id = 1;
  uint16_t n = 3;
  uint16_t t = 1;
  FieldParams field{13};
  FixedPointParams fp;
  uint16_t alice = 1;
  uint16_t bob = 2;
  bool with_client = false;

  uint16_t client_id() const { return static_cast<uint16_t>(n + 1); }
  SharingParams sharing() const { return SharingParams(n, t, field); }
};

// Transport abstraction: the in-process hub and the socket mesh both
// implement point-to-point delivery with per-sender FIFO order.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(uint16_t from, uint16_t to, const Message& msg) = 0;
};

// One plan entry: either a plain exercise or a branch on the outcome of an
// earlier ZERO_POLL. The all_zero arm runs when every member flagged a zero
// local value (a degenerate node); otherwise the other arm runs.
struct PlanItem {
  enum class Kind : uint8_t { Step, Branch };
  Kind kind = Kind::Step;
  Exercise step;
  std::string poll_id;
  std::vector<PlanItem> all_zero;
  std::vector<PlanItem> otherwise;

  static PlanItem make(Exercise ex) {
    PlanItem item;
    item.kind = Kind::Step;
    item.step = std::move(ex);
    return item;
  }
};

struct Plan {
  std::vector<PlanItem> items;
  void push(Exercise ex) { items.push_back(PlanItem::make(std::move(ex))); }
};

// A share-holding party (or the inference client when id = n+1). Consumes
// its inbox one message at a time; every send goes through the transport.
// All randomness is drawn from the injected source, so runs are reproducible
// per (seed, party).
class Member {
 public:
  Member(uint16_t id, const SessionConfig& cfg, Transport& transport,
         std::unique_ptr<RandomSource> rng);

  // Plaintext inputs private to this party (local statistics, query leaves).
  void set_private(const std::string& name, u128 value);
  void set_rows(uint64_t rows) { rows_ = rows; }
  // Pre-session store injection (shares loaded from a model file). Throws
  // ProtocolError when the id is already bound.
  void preload(const std::string& name, StoredValue v);

  void register_with_manager();
  void handle(const Message& msg);

  uint16_t id() const { return id_; }
  bool failed() const { return failed_; }
  bool session_over() const { return session_over_; }
  const std::string& failure() const { return failure_; }
  const std::map<std::string, StoredValue>& store() const { return store_; }
  const std::map<std::string, u128>& private_store() const {
    return private_;
  }

 private:
  void start_exercise(const Exercise& ex);
  void on_data(const Message& msg);
  void try_complete();
  void finish();
  void nack(const std::string& reason);
  void send(uint16_t to, Message msg);

  void bind(const std::string& name, StoredValue v);
  const StoredValue* lookup(const std::string& name) const;

  // Exercise-local helpers; each either finishes the exercise or arms the
  // collection slots consumed by on_data.
  void exec_local_arith(const Exercise& ex);
  void exec_deal_private(const Exercise& ex);
  void exec_deal_mask(const Exercise& ex);
  void exec_deal_mod(const Exercise& ex);
  void exec_reveal_to(const Exercise& ex);
  void exec_mul_reshare(const Exercise& ex);
  void exec_sq2pq(const Exercise& ex);
  void exec_approx_mask(const Exercise& ex);
  void exec_zero_poll(const Exercise& ex);

  void deal_shares(const std::string& secret_id, u128 value);

  uint16_t id_;
  SessionConfig cfg_;
  Transport& transport_;
  std::unique_ptr<RandomSource> rng_;
  bool is_client_;
  uint64_t rows_ = 0;

  std::map<std::string, StoredValue> store_;
  std::map<std::string, u128> private_;

  std::optional<Exercise> current_;
  // secret-id -> sender -> value, for the exercise in flight.
  std::map<std::string, std::map<uint16_t, u128>> slots_;
  // Data that raced ahead of its EXEC, keyed by exercise id.
  std::map<uint64_t, std::vector<Message>> early_;

  bool failed_ = false;
  bool session_over_ = false;
  std::string failure_;
};

// The scheduler and JRSZ dealer. Holds no secret shares. Dispatches the plan
// strictly in order: the next exercise leaves only after every participant
// of the previous one reported FINISHED.
class Manager {
 public:
  Manager(const SessionConfig& cfg, Transport& transport,
          std::unique_ptr<RandomSource> rng);

  // Throws ProtocolError when two reachable steps bind the same result id.
  void load_plan(Plan plan);

  void handle(const Message& msg);

  bool ready() const;       // all expected registrations arrived
  bool done() const { return done_; }
  bool aborted() const { return aborted_; }
  const std::string& abort_reason() const { return abort_reason_; }
  uint64_t total_rows() const { return total_rows_; }
  uint64_t exercises_dispatched() const { return next_exercise_id_; }
  const std::map<std::string, bool>& poll_results() const { return polls_; }
  const std::optional<Exercise>& in_flight() const { return in_flight_; }
  // Participants of the in-flight exercise that have not reported FINISHED,
  // for deadlock diagnostics.
  std::vector<uint16_t> waiting_on() const;

  // Exposed for drivers that assemble plans after registration (the divisor
  // bound depends on the registered row totals).
  void begin();

 private:
  void dispatch_next();
  void broadcast(Message msg, bool include_client);
  void abort_session(const std::string& reason);
  static void collect_result_ids(const std::vector<PlanItem>& items,
                                 std::map<std::string, bool>& seen);

  SessionConfig cfg_;
  Transport& transport_;
  std::unique_ptr<RandomSource> rng_;

  std::deque<PlanItem> queue_;
  uint64_t next_exercise_id_ = 0;
  std::optional<Exercise> in_flight_;
  bool in_flight_includes_client_ = false;
  std::map<uint16_t, bool> finished_;
  std::map<uint16_t, bool> registered_;
  std::map<uint16_t, u128> flags_;
  std::map<std::string, bool> polls_;
  uint64_t total_rows_ = 0;
  bool started_ = false;
  bool done_ = false;
  bool aborted_ = false;
  std::string abort_reason_;
};

// Expected protocol-data message count for one exercise, the per-opcode cost
// model the traffic tests pin the runtime against.
uint64_t expected_data_messages(const Exercise& ex, uint16_t n,
                                uint16_t client_id);

// Opens one stored id across member stores (debug reconstruction and model
// export). Understands all three kinds; throws ProtocolError when nobody
// holds the id, kinds are mixed, or too few shares are present.
u128 reconstruct_stored(
    const std::map<uint16_t, const std::map<std::string, StoredValue>*>&
        stores,
    const SessionConfig& cfg, const std::string& id);

// Everything a session driver needs to stand up one run, shared by the
// in-process hub and the socket mesh so both can be seeded identically.
struct SessionOptions {
  SessionConfig cfg;
  uint64_t master_seed = 1;
  double latency_ms = 0.0;     // virtual link latency (in-process transport)
  double timeout_ms = 30000.0;  // receive timeout (socket transport)
  // Optional per-party randomness tapes; exhausted tapes fall back to the
  // party's derived seed.
  std::map<uint16_t, std::deque<uint64_t>> tapes;
  std::map<uint16_t, uint64_t> rows;
  std::map<uint16_t, std::map<std::string, u128>> private_inputs;
  // Share records bound into a party's store before the session starts.
  std::map<uint16_t, std::map<std::string, StoredValue>> preloaded;

  std::unique_ptr<RandomSource> make_rng(uint16_t party) const;
};

}  // namespace spnmpc
