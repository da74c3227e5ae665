#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "spnmpc/errors.hpp"
#include "spnmpc/wire.hpp"

using namespace spnmpc;

namespace {

Message sample_exec() {
  Exercise ex;
  ex.id = 42;
  ex.op = ExOp::MulReshare;
  ex.args = {"left", "right"};
  ex.result = "prod";
  ex.c0 = 1000;
  ex.c1 = (static_cast<u128>(1) << 100) + 17;
  ex.who = 2;

  Message msg;
  msg.op = MsgOp::Exec;
  msg.exercise_id = 42;
  msg.session_id = 7;
  msg.sender = 0;
  msg.exercise = ex;
  return msg;
}

}  // namespace

TEST_CASE("frame bytes are laid out as documented") {
  Message msg;
  msg.op = MsgOp::Finished;
  msg.exercise_id = 7;
  msg.session_id = 9;
  msg.sender = 3;
  msg.secret_id = "ab";
  msg.values = {5};

  std::vector<uint8_t> frame = encode_message(msg);
  std::vector<uint8_t> expect = {
      0x00, 0x00, 0x00, 0x2d,                          // body length 45
      0x00, 0x04,                                      // FINISHED
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x07,  // exercise id
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x09,  // session id
      0x00, 0x03,                                      // sender
      0x00, 0x02, 'a',  'b',                           // secret id
      0x00,                                            // no exercise
      0x00, 0x00, 0x00, 0x01,                          // one value
      0x05, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // 5, little endian
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
  };
  CHECK(frame == expect);
}

TEST_CASE("messages round trip through the framing") {
  std::vector<Message> cases;

  Message hello;
  hello.op = MsgOp::Hello;
  hello.sender = 4;
  cases.push_back(hello);

  Message reg;
  reg.op = MsgOp::Register;
  reg.sender = 1;
  reg.session_id = 77;
  reg.values = {128};  // row count
  cases.push_back(reg);

  cases.push_back(sample_exec());

  Message share;
  share.op = MsgOp::ShareDist;
  share.exercise_id = 3;
  share.session_id = 77;
  share.sender = 2;
  share.secret_id = "w.4.1";
  share.values = {(static_cast<u128>(1) << 127) - 1, 0, 12345};
  cases.push_back(share);

  Message nack;
  nack.op = MsgOp::Nack;
  nack.exercise_id = 9;
  nack.sender = 5;
  nack.secret_id = "missing input operand";
  cases.push_back(nack);

  for (const Message& original : cases) {
    std::vector<uint8_t> frame = encode_message(original);
    auto decoded = try_decode_frame(frame);
    REQUIRE(decoded.has_value());
    CHECK(decoded->first == original);
    CHECK(decoded->second == frame.size());
  }
}

TEST_CASE("exercise blobs survive the trip intact") {
  Message msg = sample_exec();
  std::vector<uint8_t> frame = encode_message(msg);
  Message back = try_decode_frame(frame)->first;
  REQUIRE(back.exercise.has_value());
  CHECK(back.exercise->id == 42);
  CHECK(back.exercise->op == ExOp::MulReshare);
  CHECK(back.exercise->args == std::vector<std::string>{"left", "right"});
  CHECK(back.exercise->result == "prod");
  CHECK(back.exercise->c0 == 1000);
  CHECK(back.exercise->c1 == (static_cast<u128>(1) << 100) + 17);
  CHECK(back.exercise->who == 2);
}

TEST_CASE("incomplete buffers are not decoded") {
  std::vector<uint8_t> frame = encode_message(sample_exec());
  for (size_t cut : {size_t{0}, size_t{3}, frame.size() - 1}) {
    std::span<const uint8_t> partial(frame.data(), cut);
    CHECK(!try_decode_frame(partial).has_value());
  }
  // A frame followed by extra bytes consumes exactly the frame.
  std::vector<uint8_t> padded = frame;
  padded.push_back(0xff);
  auto decoded = try_decode_frame(padded);
  REQUIRE(decoded.has_value());
  CHECK(decoded->second == frame.size());
}

TEST_CASE("malformed bodies are rejected") {
  Message msg;
  msg.op = MsgOp::Flag;
  msg.values = {1};
  std::vector<uint8_t> frame = encode_message(msg);
  std::span<const uint8_t> body(frame.data() + 4, frame.size() - 4);

  // Unknown message opcode.
  std::vector<uint8_t> bad(body.begin(), body.end());
  bad[0] = 0x7f;
  bad[1] = 0x7f;
  CHECK_THROWS_AS(decode_body(bad), ParseError);

  // Truncated payload.
  std::vector<uint8_t> cut(body.begin(), body.end() - 1);
  CHECK_THROWS_AS(decode_body(cut), ParseError);

  // Trailing junk.
  std::vector<uint8_t> extra(body.begin(), body.end());
  extra.push_back(0);
  CHECK_THROWS_AS(decode_body(extra), ParseError);

  // Value count that disagrees with the remaining bytes.
  std::vector<uint8_t> short_count(body.begin(), body.end());
  size_t count_at = short_count.size() - 16 - 4;
  short_count[count_at + 3] = 2;
  CHECK_THROWS_AS(decode_body(short_count), ParseError);
}

TEST_CASE("unknown exercise opcodes are rejected") {
  std::vector<uint8_t> frame = encode_message(sample_exec());
  // The exercise opcode sits 8 bytes into the blob; the blob starts after
  // the 4-byte prefix, 2+8+8+2 header bytes, 2+0 secret id, 1 flag byte.
  size_t at = 4 + 20 + 2 + 0 + 1 + 8;
  frame[at] = 0x7f;
  frame[at + 1] = 0x7f;
  std::span<const uint8_t> body(frame.data() + 4, frame.size() - 4);
  CHECK_THROWS_AS(decode_body(body), ParseError);
}

TEST_CASE("opcode names are stable") {
  CHECK(std::string(msg_op_name(MsgOp::MulReshare)) == "MUL_RESHARE");
  CHECK(std::string(msg_op_name(MsgOp::Finished)) == "FINISHED");
  CHECK(std::string(ex_op_name(ExOp::ApproxMaskShare)) == "APPROX_MASK_SHARE");
  CHECK(std::string(ex_op_name(ExOp::ZeroPoll)) == "ZERO_POLL");
}
