#include "spnmpc/wire.hpp"

#include <cstring>

#include "spnmpc/errors.hpp"

namespace spnmpc {

const char* msg_op_name(MsgOp op) {
  switch (op) {
    case MsgOp::Hello: return "HELLO";
    case MsgOp::Register: return "REGISTER";
    case MsgOp::Exec: return "EXEC";
    case MsgOp::Finished: return "FINISHED";
    case MsgOp::Nack: return "NACK";
    case MsgOp::ShareDist: return "SHARE_DIST";
    case MsgOp::MulReshare: return "MUL_RESHARE";
    case MsgOp::RevealTo: return "REVEAL_TO";
    case MsgOp::JrszDeal: return "JRSZ_DEAL";
    case MsgOp::Flag: return "FLAG";
    case MsgOp::SessionDone: return "SESSION_DONE";
    case MsgOp::Abort: return "ABORT";
  }
  return "UNKNOWN";
}

const char* ex_op_name(ExOp op) {
  switch (op) {
    case ExOp::StorePublic: return "STORE_PUBLIC";
    case ExOp::Add: return "ADD";
    case ExOp::Sub: return "SUB";
    case ExOp::ScalePublic: return "SCALE_PUBLIC";
    case ExOp::PublicMinus: return "PUBLIC_MINUS";
    case ExOp::DealPrivate: return "DEAL_PRIVATE";
    case ExOp::DealMask: return "DEAL_MASK";
    case ExOp::DealMod: return "DEAL_MOD";
    case ExOp::RevealTo: return "REVEAL_TO";
    case ExOp::MulReshare: return "MUL_RESHARE";
    case ExOp::Jrsz: return "JRSZ";
    case ExOp::Sq2Pq: return "SQ2PQ";
    case ExOp::ApproxMaskShare: return "APPROX_MASK_SHARE";
    case ExOp::ZeroPoll: return "ZERO_POLL";
  }
  return "UNKNOWN";
}

void put_u16_be(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>(v >> shift));
  }
}

void put_u64_be(std::vector<uint8_t>& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>(v >> shift));
  }
}

namespace {

// Bounds-checked big-endian reader over a frame body.
class Reader {
 public:
  explicit Reader(std::span<const uint8_t> data) : data_(data) {}

  uint16_t u16() { return static_cast<uint16_t>(bytes(2)); }
  uint32_t u32() { return static_cast<uint32_t>(bytes(4)); }
  uint64_t u64() { return bytes(8); }
  uint8_t u8() { return static_cast<uint8_t>(bytes(1)); }

  std::string str(size_t len) {
    need(len);
    std::string out(reinterpret_cast<const char*>(data_.data() + at_), len);
    at_ += len;
    return out;
  }

  u128 element() {
    need(16);
    u128 v = decode_u128(data_.data() + at_);
    at_ += 16;
    return v;
  }

  bool done() const { return at_ == data_.size(); }
  size_t remaining() const { return data_.size() - at_; }

 private:
  uint64_t bytes(size_t count) {
    need(count);
    uint64_t v = 0;
    for (size_t i = 0; i < count; ++i) {
      v = (v << 8) | data_[at_ + i];
    }
    at_ += count;
    return v;
  }

  void need(size_t count) {
    if (remaining() < count) throw ParseError("truncated message frame");
  }

  std::span<const uint8_t> data_;
  size_t at_ = 0;
};

void put_string(std::vector<uint8_t>& out, const std::string& s) {
  if (s.size() > UINT16_MAX) throw ParseError("identifier too long");
  put_u16_be(out, static_cast<uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_element(std::vector<uint8_t>& out, u128 v) {
  std::array<uint8_t, 16> raw = encode_u128(v);
  out.insert(out.end(), raw.begin(), raw.end());
}

void put_exercise(std::vector<uint8_t>& out, const Exercise& ex) {
  put_u64_be(out, ex.id);
  put_u16_be(out, static_cast<uint16_t>(ex.op));
  put_u16_be(out, ex.who);
  put_element(out, ex.c0);
  put_element(out, ex.c1);
  put_string(out, ex.result);
  if (ex.args.size() > UINT16_MAX) throw ParseError("too many arguments");
  put_u16_be(out, static_cast<uint16_t>(ex.args.size()));
  for (const std::string& a : ex.args) put_string(out, a);
}

Exercise read_exercise(Reader& in) {
  Exercise ex;
  ex.id = in.u64();
  uint16_t op = in.u16();
  if (op < 1 || op > static_cast<uint16_t>(ExOp::ZeroPoll)) {
    throw ParseError("unknown exercise opcode " + std::to_string(op));
  }
  ex.op = static_cast<ExOp>(op);
  ex.who = in.u16();
  ex.c0 = in.element();
  ex.c1 = in.element();
  ex.result = in.str(in.u16());
  uint16_t argc = in.u16();
  ex.args.reserve(argc);
  for (uint16_t i = 0; i < argc; ++i) ex.args.push_back(in.str(in.u16()));
  return ex;
}

}  // namespace

std::vector<uint8_t> encode_message(const Message& msg) {
  std::vector<uint8_t> body;
  put_u16_be(body, static_cast<uint16_t>(msg.op));
  put_u64_be(body, msg.exercise_id);
  put_u64_be(body, msg.session_id);
  put_u16_be(body, msg.sender);
  put_string(body, msg.secret_id);
  body.push_back(msg.exercise ? 1 : 0);
  if (msg.exercise) put_exercise(body, *msg.exercise);
  if (msg.values.size() > UINT32_MAX) throw ParseError("too many values");
  put_u32_be(body, static_cast<uint32_t>(msg.values.size()));
  for (u128 v : msg.values) put_element(body, v);

  std::vector<uint8_t> frame;
  frame.reserve(4 + body.size());
  if (body.size() > UINT32_MAX) throw ParseError("frame too large");
  put_u32_be(frame, static_cast<uint32_t>(body.size()));
  frame.insert(frame.end(), body.begin(), body.end());
  return frame;
}

Message decode_body(std::span<const uint8_t> body) {
  Reader in(body);
  Message msg;
  uint16_t op = in.u16();
  if (op < 1 || op > static_cast<uint16_t>(MsgOp::Abort)) {
    throw ParseError("unknown message opcode " + std::to_string(op));
  }
  msg.op = static_cast<MsgOp>(op);
  msg.exercise_id = in.u64();
  msg.session_id = in.u64();
  msg.sender = in.u16();
  msg.secret_id = in.str(in.u16());
  if (in.u8() != 0) msg.exercise = read_exercise(in);
  uint32_t count = in.u32();
  if (in.remaining() != static_cast<size_t>(count) * 16) {
    throw ParseError("value payload length mismatch");
  }
  msg.values.reserve(count);
  for (uint32_t i = 0; i < count; ++i) msg.values.push_back(in.element());
  if (!in.done()) throw ParseError("trailing bytes in frame");
  return msg;
}

std::optional<std::pair<Message, size_t>> try_decode_frame(
    std::span<const uint8_t> buffer) {
  if (buffer.size() < 4) return std::nullopt;
  uint32_t len = (static_cast<uint32_t>(buffer[0]) << 24) |
                 (static_cast<uint32_t>(buffer[1]) << 16) |
                 (static_cast<uint32_t>(buffer[2]) << 8) |
                 static_cast<uint32_t>(buffer[3]);
  if (buffer.size() < 4u + len) return std::nullopt;
  Message msg = decode_body(buffer.subspan(4, len));
  return std::make_pair(std::move(msg), static_cast<size_t>(4) + len);
}

}  // namespace spnmpc
