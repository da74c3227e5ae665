#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spnmpc/field.hpp"

namespace spnmpc {

// Parties are numbered 1..n; 0 is reserved for the manager, which never
// holds a share of anything.
struct PartyId {
  uint16_t value = 0;
  friend bool operator==(PartyId a, PartyId b) { return a.value == b.value; }
  friend auto operator<=>(PartyId a, PartyId b) {
    return a.value <=> b.value;
  }
};

// n members with polynomial threshold t. Secure multiplication needs
// n >= 2t+1, and evaluation points 1..n must be distinct mod p.
struct SharingParams {
  SharingParams(uint16_t n, uint16_t t, FieldParams field);

  uint16_t n;
  uint16_t t;
  FieldParams field;
};

struct AdditiveShare {
  std::string secret_id;
  PartyId owner;
  FieldElement value;
};

struct PolynomialShare {
  std::string secret_id;
  PartyId owner;  // doubles as the evaluation point
  FieldElement value;
};

// Splits x into n values summing to x mod p: the first n-1 are uniform, the
// last absorbs the difference. n >= 2.
std::vector<AdditiveShare> additive_share(const FieldElement& x, uint16_t n,
                                          RandomSource& rng,
                                          std::string_view secret_id);

// Sums one share per party 1..n. Throws ProtocolError on a missing or
// duplicated owner or a mixed secret id.
FieldElement reconstruct_additive(std::span<const AdditiveShare> shares,
                                  uint16_t n);

// Joint random sharing of zero, dealt by a third party (the manager in this
// codebase): fresh additive shares of 0 usable as one-time masks.
std::vector<AdditiveShare> jrsz_deal(const SharingParams& params,
                                     RandomSource& rng,
                                     std::string_view secret_id);

// Degree-t polynomial with constant term x, evaluated at 1..n. Coefficients
// are uniform.
std::vector<PolynomialShare> shamir_share(const FieldElement& x,
                                          const SharingParams& params,
                                          RandomSource& rng,
                                          std::string_view secret_id);

// As above with an explicit degree (the multiplication step reshares the
// local degree-2t product back down to degree t).
std::vector<PolynomialShare> shamir_share_degree(const FieldElement& x,
                                                 uint16_t degree,
                                                 const SharingParams& params,
                                                 RandomSource& rng,
                                                 std::string_view secret_id);

// Interpolates through all given points and returns the value at zero.
// Needs at least t+1 shares with distinct owners; a consistent
// overdetermined set reconstructs the same secret.
FieldElement lagrange_reconstruct(std::span<const PolynomialShare> shares,
                                  const SharingParams& params);

// Lagrange coefficients at zero for evaluation points xs (used to fold
// resharing contributions after a secure multiplication).
std::vector<FieldElement> lagrange_weights_at_zero(
    std::span<const uint16_t> xs, const FieldParams& field);

// SQ2PQ, the local halves of the additive-to-polynomial conversion: every
// party Shamir-shares its additive share (sq2pq_spread), then each party
// sums the sub-shares it received (sq2pq_combine).
std::vector<PolynomialShare> sq2pq_spread(const AdditiveShare& mine,
                                          const SharingParams& params,
                                          RandomSource& rng);
PolynomialShare sq2pq_combine(std::span<const PolynomialShare> received,
                              const SharingParams& params);

// Wire encoding of one share record: secret-id (u16 big-endian length +
// UTF-8 bytes), owner id (u16 big-endian), value (16-byte little-endian).
std::vector<uint8_t> encode_share(std::string_view secret_id, uint16_t owner,
                                  u128 value);
struct ShareRecord {
  std::string secret_id;
  uint16_t owner;
  u128 value;
};
// Decodes one record starting at offset; advances offset past it.
ShareRecord decode_share(std::span<const uint8_t> bytes, size_t& offset);

}  // namespace spnmpc
