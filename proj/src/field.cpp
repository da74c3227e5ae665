#include "spnmpc/field.hpp"

#include <algorithm>

#include "spnmpc/errors.hpp"

namespace spnmpc {

std::string to_string(u128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v > 0) {
    out.push_back(static_cast<char>('0' + static_cast<unsigned>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

u128 parse_u128(std::string_view text) {
  if (text.empty()) throw ParseError("empty integer literal");
  u128 v = 0;
  const u128 max = ~static_cast<u128>(0);
  for (char c : text) {
    if (c < '0' || c > '9')
      throw ParseError("bad digit in integer literal: " + std::string(text));
    unsigned d = static_cast<unsigned>(c - '0');
    if (v > (max - d) / 10)
      throw ParseError("integer literal does not fit in 128 bits: " +
                       std::string(text));
    v = v * 10 + d;
  }
  return v;
}

int bit_length(u128 v) {
  int n = 0;
  while (v > 0) {
    ++n;
    v >>= 1;
  }
  return n;
}

std::array<uint8_t, 16> encode_u128(u128 v) {
  std::array<uint8_t, 16> out{};
  for (int i = 0; i < 16; ++i) {
    out[static_cast<size_t>(i)] = static_cast<uint8_t>(v >> (8 * i));
  }
  return out;
}

u128 decode_u128(const uint8_t* bytes) {
  u128 v = 0;
  for (int i = 15; i >= 0; --i) {
    v = (v << 8) | bytes[i];
  }
  return v;
}

u128 add_mod(u128 a, u128 b, u128 p) {
  u128 s = a + b;
  // Wraparound is possible when p > 2^127; a single subtraction fixes both
  // the wrap and the s >= p case because a, b < p.
  if (s < a || s >= p) s -= p;
  return s;
}

u128 sub_mod(u128 a, u128 b, u128 p) {
  return a >= b ? a - b : a + (p - b);
}

u128 mul_mod(u128 a, u128 b, u128 p) {
  if (p == 0) throw DomainError("zero modulus");
  const u128 kMax64 = ~static_cast<uint64_t>(0);
  if (p <= kMax64) {
    // Operands fit in 64 bits, the full product fits in 128.
    return (a % p) * (b % p) % p;
  }
  // Interleaved shift-reduce for wide moduli: the double-width product never
  // materializes, each step stays below 2^128 via add_mod.
  if (a < b) std::swap(a, b);
  u128 acc = 0;
  while (b > 0) {
    if (b & 1) acc = add_mod(acc, a, p);
    a = add_mod(a, a, p);
    b >>= 1;
  }
  return acc;
}

u128 pow_mod(u128 base, u128 exp, u128 p) {
  u128 acc = 1 % p;
  base %= p;
  while (exp > 0) {
    if (exp & 1) acc = mul_mod(acc, base, p);
    base = mul_mod(base, base, p);
    exp >>= 1;
  }
  return acc;
}

u128 inv_mod(u128 a, u128 p) {
  a %= p;
  if (a == 0) throw DomainError("inverse of zero");
  // Extended Euclid with signed bookkeeping folded into the field: track
  // coefficients as (value, negated?) pairs to stay inside u128.
  u128 r0 = p, r1 = a;
  u128 s0 = 0, s1 = 1;
  bool n0 = false, n1 = false;
  while (r1 != 0) {
    u128 q = r0 / r1;
    u128 r2 = r0 % r1;
    // s2 = s0 - q*s1
    u128 qs = 0;
    {
      // q*s1 can exceed 128 bits only if the gcd chain misbehaves; reduce
      // mod p as we go since only s mod p matters.
      qs = mul_mod(q % p, s1 % p, p);
    }
    u128 s2;
    bool n2;
    if (n0 == n1) {
      u128 l = s0 % p, r = qs;
      if (l >= r) {
        s2 = l - r;
        n2 = n0;
      } else {
        s2 = r - l;
        n2 = !n0;
      }
    } else {
      s2 = add_mod(s0 % p, qs, p);
      n2 = n0;
    }
    r0 = r1;
    r1 = r2;
    s0 = s1;
    n0 = n1;
    s1 = s2;
    n1 = n2;
  }
  if (r0 != 1) throw DomainError("not invertible: " + to_string(a));
  u128 s = s0 % p;
  return n0 ? (s == 0 ? 0 : p - s) : s;
}

namespace {

bool miller_rabin_witness(u128 n, u128 a, u128 d, int r) {
  a %= n;
  if (a == 0) return false;
  u128 x = pow_mod(a, d, n);
  if (x == 1 || x == n - 1) return false;
  for (int i = 1; i < r; ++i) {
    x = mul_mod(x, x, n);
    if (x == n - 1) return false;
  }
  return true;  // composite witness
}

}  // namespace

bool is_prime_u128(u128 n) {
  if (n < 2) return false;
  static const unsigned kSmall[] = {2,  3,  5,  7,  11, 13, 17, 19, 23,
                                    29, 31, 37, 41, 43, 47, 53, 59, 61,
                                    67, 71, 73, 79, 83, 89, 97};
  for (unsigned q : kSmall) {
    if (n == q) return true;
    if (n % q == 0) return false;
  }
  u128 d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  // The first 13 bases decide primality for everything below 3.3e24, which
  // covers the defaults; the longer tail handles wider moduli.
  for (unsigned a : kSmall) {
    if (miller_rabin_witness(n, a, d, r)) return false;
  }
  return true;
}

FieldParams::FieldParams(u128 p) : p_(p) {
  if (!is_prime_u128(p))
    throw ConfigError("modulus is not prime: " + to_string(p));
}

FieldElement FieldParams::element(u128 v) const {
  return FieldElement(v % p_, p_);
}

FieldElement FieldParams::zero() const { return FieldElement(0, p_); }

FieldElement FieldParams::one() const { return FieldElement(1 % p_, p_); }

FieldElement::FieldElement(u128 v, u128 p) : v_(v), p_(p) {
  if (p == 0) throw ConfigError("field element with zero modulus");
  if (v >= p)
    throw ConfigError("field element out of range: " + to_string(v));
}

void FieldElement::check_same(const FieldElement& o) const {
  if (p_ != o.p_)
    throw ConfigError("field modulus mismatch: " + to_string(p_) + " vs " +
                      to_string(o.p_));
}

FieldElement FieldElement::operator+(const FieldElement& o) const {
  check_same(o);
  return FieldElement(add_mod(v_, o.v_, p_), p_);
}

FieldElement FieldElement::operator-(const FieldElement& o) const {
  check_same(o);
  return FieldElement(sub_mod(v_, o.v_, p_), p_);
}

FieldElement FieldElement::operator*(const FieldElement& o) const {
  check_same(o);
  return FieldElement(mul_mod(v_, o.v_, p_), p_);
}

FieldElement FieldElement::neg() const {
  return FieldElement(v_ == 0 ? 0 : p_ - v_, p_);
}

FieldElement FieldElement::inv() const {
  return FieldElement(inv_mod(v_, p_), p_);
}

FieldElement sample_uniform(const FieldParams& field, RandomSource& rng) {
  return field.element(sample_bounded(field.modulus(), rng));
}

}  // namespace spnmpc
