#include "spnmpc/fixed_point.hpp"

#include <cmath>

#include "spnmpc/errors.hpp"
#include "spnmpc/int128.hpp"

namespace spnmpc {

uint32_t ceil_log2_u64(uint64_t x) {
  if (x == 0) throw ConfigError("ceil_log2 of zero");
  uint32_t k = 0;
  while ((static_cast<u128>(1) << k) < x) ++k;
  return k;
}

void FixedPointParams::validate_base(const FieldParams& field) const {
  if (d < 2) throw ConfigError("scale d must be at least 2");
  if (rho == 0 || rho > 120) {
    throw ConfigError("masking width rho must be in [1, 120]");
  }
  // u + r with u <= d and r < 2^rho must not wrap mod p.
  u128 bound = (static_cast<u128>(1) << rho) + d;
  if (field.modulus() <= bound) {
    throw ConfigError("modulus too small for masking: need p > 2^rho + d");
  }
}

void FixedPointParams::validate_newton(const FieldParams& field) const {
  validate_base(field);
  if (e < 2 || (e & (e - 1)) != 0) {
    throw ConfigError("precision factor e must be a power of two, >= 2");
  }
  if (warmup_iters < ceil_log2_u64(d)) {
    throw ConfigError("warmup_iters below ceil(log2 d)");
  }
  if (precision_iters < ceil_log2_u64(e)) {
    throw ConfigError("precision_iters below ceil(log2 e)");
  }
  // t_prec > log2(5 + ln(k_err+1)); at k_err=1 the right side is ~2.51.
  double rhs = std::log2(5.0 + std::log(static_cast<double>(k_err) + 1.0));
  if (static_cast<double>(t_prec) <= rhs) {
    throw ConfigError("t_prec too small for the error bound");
  }
  u128 fine = static_cast<u128>(d) * e;
  if (field.modulus() <= fine) {
    throw ConfigError("modulus too small: need p > d*e");
  }
  u128 bound = (static_cast<u128>(1) << rho) + fine;
  if (field.modulus() <= bound) {
    throw ConfigError("modulus too small for masking: need p > 2^rho + d*e");
  }
  // The iteration multiplies values up to 2*d*e before truncating, so the
  // products (plus a mask) must stay below the modulus or they wrap silently.
  if (fine >= (static_cast<u128>(1) << 60)) {
    throw ConfigError("d*e too large: products would overflow the checks");
  }
  u128 product_bound = 4 * fine * fine + ((static_cast<u128>(1)) << rho);
  if (field.modulus() <= product_bound) {
    throw ConfigError(
        "modulus too small for the iteration: need p > 4*(d*e)^2 + 2^rho");
  }
}

uint64_t FixedPointParams::weight_tolerance() const {
  u128 num = static_cast<u128>(16) * (static_cast<u128>(k_err) + 1) * d;
  uint64_t tau = static_cast<uint64_t>((num + e - 1) / e);
  return tau < 2 ? 2 : tau;
}

}  // namespace spnmpc
