#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spnmpc/int128.hpp"

namespace spnmpc {

// Message opcodes on the wire. Control traffic (HELLO through ABORT) and
// protocol data (SHARE_DIST through FLAG) share one framing.
enum class MsgOp : uint16_t {
  Hello = 1,        // socket handshake: sender introduces itself
  Register = 2,     // member joins a session, values[0] = local row count
  Exec = 3,         // manager dispatches an exercise (exercise blob attached)
  Finished = 4,     // member reports exercise completion
  Nack = 5,         // member refuses an exercise; secret_id carries the reason
  ShareDist = 6,    // dealer hands a party one share of a secret
  MulReshare = 7,   // degree-reduction sub-share during multiplication
  RevealTo = 8,     // share sent to the reveal target
  JrszDeal = 9,     // manager deals an additive share of zero
  Flag = 10,        // one-bit report to the manager (zero polls)
  SessionDone = 11, // manager closes the session
  Abort = 12,       // manager aborts the session; secret_id carries the reason
};

// Exercise opcodes: what a member executes when an Exec message arrives.
enum class ExOp : uint16_t {
  StorePublic = 1,     // bind result to the public constant c0
  Add = 2,             // result = args[0] + args[1]
  Sub = 3,             // result = args[0] - args[1]
  ScalePublic = 4,     // result = c0 * args[0]
  PublicMinus = 5,     // result = c0 - args[0]
  DealPrivate = 6,     // party `who` Shamir-shares its private value args[0]
  DealMask = 7,        // party `who` samples r < 2^c0, deals [r] and [r mod c1]
  DealMod = 8,         // party `who` deals [v mod c0] of its revealed v
  RevealTo = 9,        // all parties send shares of args[0] to party `who`
  MulReshare = 10,     // result = args[0] * args[1] with degree reduction
  Jrsz = 11,           // manager deals fresh additive shares of zero
  Sq2Pq = 12,          // convert additive args[0] to polynomial shares
  ApproxMaskShare = 13,// result = round(c0*num/(c1*den)) + jrsz mask (approx learning)
  ZeroPoll = 14,       // members flag whether their args[0] value is zero
};

const char* msg_op_name(MsgOp op);
const char* ex_op_name(ExOp op);

// One scheduled operation. args and result name entries in the member data
// stores; c0/c1 are public constants; who selects the acting party for the
// single-party opcodes (dealer, reveal target).
struct Exercise {
  uint64_t id = 0;
  ExOp op = ExOp::Add;
  std::vector<std::string> args;
  std::string result;
  u128 c0 = 0;
  u128 c1 = 0;
  uint16_t who = 0;

  friend bool operator==(const Exercise&, const Exercise&) = default;
};

// A single frame. secret_id names the data item being moved (or carries the
// diagnostic for NACK/ABORT); values hold field elements; Exec messages
// attach the exercise.
struct Message {
  MsgOp op = MsgOp::Hello;
  uint64_t exercise_id = 0;
  uint64_t session_id = 0;
  uint16_t sender = 0;
  std::string secret_id;
  std::vector<u128> values;
  std::optional<Exercise> exercise;

  friend bool operator==(const Message&, const Message&) = default;
};

// Frame layout: u32 big-endian body length, then the body:
//   u16 opcode | u64 exercise-id | u64 session-id | u16 sender |
//   u16 id length + secret-id bytes | u8 exercise flag [+ exercise blob] |
//   u32 value count + 16-byte little-endian values.
// encode_message returns the whole frame including the length prefix;
// decode_body parses a body (everything after the prefix) and throws
// ParseError on malformed input.
std::vector<uint8_t> encode_message(const Message& msg);
Message decode_body(std::span<const uint8_t> body);

// Splits one frame off the front of a byte stream. Returns the decoded
// message and the frame size, or nullopt when the buffer does not yet hold a
// complete frame.
std::optional<std::pair<Message, size_t>> try_decode_frame(
    std::span<const uint8_t> buffer);

// Big-endian integer helpers shared by the framing and the share records.
void put_u16_be(std::vector<uint8_t>& out, uint16_t v);
void put_u32_be(std::vector<uint8_t>& out, uint32_t v);
void put_u64_be(std::vector<uint8_t>& out, uint64_t v);

}  // namespace spnmpc
