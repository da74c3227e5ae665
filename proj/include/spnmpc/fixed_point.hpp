#pragma once

#include <cstdint>

#include "spnmpc/field.hpp"

namespace spnmpc {

// Fixed-point configuration for the division and reciprocal protocols.
// Real values in [0,1] ride as integers in [0,d]; the Newton phase works at
// the finer scale d*e and the result is truncated back down by e.
struct FixedPointParams {
  uint64_t d = 256;                // public scale factor, >= 2
  uint64_t e = 1u << 16;           // precision factor, power of two
  uint32_t rho = 40;               // statistical masking width in bits
  uint32_t warmup_iters = 16;      // Newton warm-up iterations
  uint32_t precision_iters = 16;   // Newton precision iterations
  uint32_t t_prec = 5;             // precision parameter of the error bound
  uint32_t k_err = 1;              // division error constant in 16(k+1)/e

  // Checks what plain masking and division need: d >= 2, rho sane, and the
  // modulus large enough that u + r never wraps for u <= d.
  void validate_base(const FieldParams& field) const;

  // Full Newton preconditions on top of validate_base: e a power of two,
  // iteration counts past the guarantee thresholds ceil(log2 d) and
  // ceil(log2 e), t_prec > log2(5 + ln(k_err+1)), p > 2^rho + d*e so masked
  // values at the fine scale stay below the modulus, and p > 4*(d*e)^2 +
  // 2^rho so the iteration's products never wrap.
  void validate_newton(const FieldParams& field) const;

  // Learned-weight tolerance: max(2, ceil(16*(k_err+1)*d / e)).
  uint64_t weight_tolerance() const;
};

// Smallest k with 2^k >= x (x >= 1).
uint32_t ceil_log2_u64(uint64_t x);

}  // namespace spnmpc
