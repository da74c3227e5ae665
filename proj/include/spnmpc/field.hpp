#pragma once

#include <cstdint>

#include "spnmpc/int128.hpp"
#include "spnmpc/random.hpp"

namespace spnmpc {

class FieldElement;

// Prime field Z_p for p up to 128 bits. Construction checks primality with
// fixed-base Miller-Rabin, so a FieldParams in hand is always a valid field.
class FieldParams {
 public:
  explicit FieldParams(u128 p);

  u128 modulus() const { return p_; }

  // Canonical element; v is reduced mod p.
  FieldElement element(u128 v) const;
  FieldElement zero() const;
  FieldElement one() const;

  friend bool operator==(const FieldParams& a, const FieldParams& b) {
    return a.p_ == b.p_;
  }

 private:
  u128 p_;
};

// Immutable value in [0, p). Carries its modulus so cross-field mixups are
// caught at the point of use instead of corrupting a protocol run.
class FieldElement {
 public:
  FieldElement() : v_(0), p_(0) {}
  FieldElement(u128 v, u128 p);

  u128 value() const { return v_; }
  u128 modulus() const { return p_; }

  FieldElement operator+(const FieldElement& o) const;
  FieldElement operator-(const FieldElement& o) const;
  FieldElement operator*(const FieldElement& o) const;
  FieldElement neg() const;
  FieldElement inv() const;  // DomainError on zero

  friend bool operator==(const FieldElement& a, const FieldElement& b) {
    return a.v_ == b.v_ && a.p_ == b.p_;
  }

 private:
  void check_same(const FieldElement& o) const;
  u128 v_, p_;
};

// Modular primitives on raw words. a and b must already be < p.
u128 add_mod(u128 a, u128 b, u128 p);
u128 sub_mod(u128 a, u128 b, u128 p);
u128 mul_mod(u128 a, u128 b, u128 p);
u128 pow_mod(u128 base, u128 exp, u128 p);
u128 inv_mod(u128 a, u128 p);  // extended Euclid; DomainError on zero

// Deterministic Miller-Rabin with a fixed base set (the 13 smallest primes,
// proven complete below ~3.3e24, extended with further small-prime bases for
// wider inputs). No randomness involved.
bool is_prime_u128(u128 n);

// Uniform field element by rejection sampling.
FieldElement sample_uniform(const FieldParams& field, RandomSource& rng);

}  // namespace spnmpc
