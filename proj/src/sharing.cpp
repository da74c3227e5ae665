#include "spnmpc/sharing.hpp"

#include <algorithm>
#include <set>

#include "spnmpc/errors.hpp"

namespace spnmpc {

SharingParams::SharingParams(uint16_t n_, uint16_t t_, FieldParams field_)
    : n(n_), t(t_), field(field_) {
  if (n < 3) throw ConfigError("need at least 3 members");
  if (t < 1) throw ConfigError("threshold must be at least 1");
  if (2 * t + 1 > n)
    throw ConfigError("multiplication needs n >= 2t+1, got n=" +
                      std::to_string(n) + " t=" + std::to_string(t));
  if (static_cast<u128>(n) >= field.modulus())
    throw ConfigError("party count must be below the field modulus");
}

std::vector<AdditiveShare> additive_share(const FieldElement& x, uint16_t n,
                                          RandomSource& rng,
                                          std::string_view secret_id) {
  if (n < 2) throw ConfigError("additive sharing needs at least 2 parties");
  FieldParams field(x.modulus());
  std::vector<AdditiveShare> out;
  out.reserve(n);
  FieldElement acc = field.zero();
  for (uint16_t i = 1; i < n; ++i) {
    FieldElement r = sample_uniform(field, rng);
    acc = acc + r;
    out.push_back({std::string(secret_id), PartyId{i}, r});
  }
  out.push_back({std::string(secret_id), PartyId{n}, x - acc});
  return out;
}

FieldElement reconstruct_additive(std::span<const AdditiveShare> shares,
                                  uint16_t n) {
  if (shares.size() != n)
    throw ProtocolError("additive reconstruction needs one share per party");
  std::set<uint16_t> seen;
  FieldParams field(shares[0].value.modulus());
  FieldElement acc = field.zero();
  for (const auto& s : shares) {
    if (s.secret_id != shares[0].secret_id)
      throw ProtocolError("mixed secret ids in reconstruction");
    if (s.owner.value < 1 || s.owner.value > n || !seen.insert(s.owner.value).second)
      throw ProtocolError("bad or duplicate share owner " +
                          std::to_string(s.owner.value));
    acc = acc + s.value;
  }
  return acc;
}

std::vector<AdditiveShare> jrsz_deal(const SharingParams& params,
                                     RandomSource& rng,
                                     std::string_view secret_id) {
  return additive_share(params.field.zero(), params.n, rng, secret_id);
}

std::vector<PolynomialShare> shamir_share_degree(const FieldElement& x,
                                                 uint16_t degree,
                                                 const SharingParams& params,
                                                 RandomSource& rng,
                                                 std::string_view secret_id) {
  if (x.modulus() != params.field.modulus())
    throw ConfigError("secret lives in a different field");
  if (degree < 1 || degree >= params.n)
    throw ConfigError("bad sharing degree " + std::to_string(degree));
  std::vector<FieldElement> coeffs;
  coeffs.reserve(degree + 1u);
  coeffs.push_back(x);
  for (uint16_t i = 0; i < degree; ++i)
    coeffs.push_back(sample_uniform(params.field, rng));
  std::vector<PolynomialShare> out;
  out.reserve(params.n);
  for (uint16_t i = 1; i <= params.n; ++i) {
    // Horner evaluation at point i.
    FieldElement point = params.field.element(i);
    FieldElement v = coeffs.back();
    for (size_t k = coeffs.size() - 1; k-- > 0;) v = v * point + coeffs[k];
    out.push_back({std::string(secret_id), PartyId{i}, v});
  }
  return out;
}

std::vector<PolynomialShare> shamir_share(const FieldElement& x,
                                          const SharingParams& params,
                                          RandomSource& rng,
                                          std::string_view secret_id) {
  return shamir_share_degree(x, params.t, params, rng, secret_id);
}

std::vector<FieldElement> lagrange_weights_at_zero(
    std::span<const uint16_t> xs, const FieldParams& field) {
  std::vector<FieldElement> out;
  out.reserve(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    FieldElement num = field.one();
    FieldElement den = field.one();
    FieldElement xi = field.element(xs[i]);
    for (size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      FieldElement xj = field.element(xs[j]);
      num = num * xj;            // (0 - xj) up to sign
      den = den * (xj - xi);     // (xi - xj) with the sign folded in
    }
    out.push_back(num * den.inv());
  }
  return out;
}

FieldElement lagrange_reconstruct(std::span<const PolynomialShare> shares,
                                  const SharingParams& params) {
  if (shares.size() < static_cast<size_t>(params.t) + 1)
    throw ProtocolError("need at least t+1 shares to reconstruct");
  std::set<uint16_t> seen;
  std::vector<uint16_t> xs;
  for (const auto& s : shares) {
    if (s.secret_id != shares[0].secret_id)
      throw ProtocolError("mixed secret ids in reconstruction");
    if (s.owner.value == 0 || !seen.insert(s.owner.value).second)
      throw ProtocolError("bad or duplicate share owner " +
                          std::to_string(s.owner.value));
    xs.push_back(s.owner.value);
  }
  auto weights = lagrange_weights_at_zero(xs, params.field);
  FieldElement acc = params.field.zero();
  for (size_t i = 0; i < shares.size(); ++i)
    acc = acc + weights[i] * shares[i].value;
  return acc;
}

std::vector<PolynomialShare> sq2pq_spread(const AdditiveShare& mine,
                                          const SharingParams& params,
                                          RandomSource& rng) {
  return shamir_share(mine.value, params, rng, mine.secret_id);
}

PolynomialShare sq2pq_combine(std::span<const PolynomialShare> received,
                              const SharingParams& params) {
  if (received.size() != params.n)
    throw ProtocolError("sq2pq needs a sub-share from every party");
  FieldElement acc = params.field.zero();
  for (const auto& s : received) {
    if (s.owner.value != received[0].owner.value)
      throw ProtocolError("sq2pq sub-shares for different points");
    acc = acc + s.value;
  }
  return {received[0].secret_id, received[0].owner, acc};
}

std::vector<uint8_t> encode_share(std::string_view secret_id, uint16_t owner,
                                  u128 value) {
  if (secret_id.size() > 0xffff)
    throw ConfigError("secret id longer than 65535 bytes");
  std::vector<uint8_t> out;
  out.reserve(secret_id.size() + 20);
  out.push_back(static_cast<uint8_t>(secret_id.size() >> 8));
  out.push_back(static_cast<uint8_t>(secret_id.size() & 0xff));
  out.insert(out.end(), secret_id.begin(), secret_id.end());
  out.push_back(static_cast<uint8_t>(owner >> 8));
  out.push_back(static_cast<uint8_t>(owner & 0xff));
  auto v = encode_u128(value);
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

ShareRecord decode_share(std::span<const uint8_t> bytes, size_t& offset) {
  auto need = [&](size_t k) {
    if (offset + k > bytes.size())
      throw ParseError("truncated share record");
  };
  need(2);
  size_t len = (static_cast<size_t>(bytes[offset]) << 8) | bytes[offset + 1];
  offset += 2;
  need(len);
  std::string id(bytes.begin() + static_cast<long>(offset),
                 bytes.begin() + static_cast<long>(offset + len));
  offset += len;
  need(2);
  uint16_t owner = static_cast<uint16_t>((bytes[offset] << 8) | bytes[offset + 1]);
  offset += 2;
  need(16);
  u128 value = decode_u128(bytes.data() + offset);
  offset += 16;
  return {std::move(id), owner, value};
}

}  // namespace spnmpc
