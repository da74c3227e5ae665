#pragma once

#include <stdexcept>
#include <string>

namespace spnmpc {

// Error taxonomy shared by all components. The CLI maps each class to a
// distinct exit code, so new failure kinds should subclass one of these
// rather than throwing std::runtime_error directly.

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad parameters: non-prime modulus, mismatched fields, invalid (n, t), ...
struct ConfigError : Error {
  using Error::Error;
};

// Mathematically undefined request (inverse of zero, conditional on a
// zero-probability evidence set).
struct DomainError : Error {
  using Error::Error;
};

// A protocol run went wrong: missing shares, NACK from a member, deadlock,
// write-once violation, dropped connection.
struct ProtocolError : Error {
  using Error::Error;
};

// Transport-level failure: unreachable endpoint, handshake trouble, receive
// timeout, connection lost mid-session.
struct ConnectivityError : Error {
  using Error::Error;
};

// Malformed structure / dataset / share / manifest file.
struct ParseError : Error {
  using Error::Error;
};

// The randomness source failed (exhausted scripted tape, rejection cap).
struct RandomnessError : Error {
  using Error::Error;
};

}  // namespace spnmpc
