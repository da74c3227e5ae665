#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spnmpc/party.hpp"
#include "spnmpc/spn.hpp"

namespace spnmpc {

// Builds exercise plans. Result ids are chosen by the caller (prefixes keep
// them collision-free); the manager assigns numeric exercise ids at dispatch
// time, so plans stay branch-friendly.
class Planner {
 public:
  explicit Planner(const SessionConfig& cfg) : cfg_(cfg) {}

  const SessionConfig& cfg() const { return cfg_; }
  Plan take() { return std::move(plan_); }
  size_t size() const { return plan_.items.size(); }

  // Primitive emitters. Each returns the id the exercise binds.
  std::string store_public(const std::string& id, u128 value);
  std::string add(const std::string& id, const std::string& a,
                  const std::string& b);
  std::string sub(const std::string& id, const std::string& a,
                  const std::string& b);
  std::string scale_public(const std::string& id, const std::string& a,
                           u128 c);
  std::string public_minus(const std::string& id, u128 c,
                           const std::string& a);
  std::string deal_private(const std::string& id, uint16_t who,
                           const std::string& private_name);
  // Binds id+".r" (the mask) and id+".q" (mask mod d).
  std::string deal_mask(const std::string& id, uint32_t rho, u128 d);
  std::string deal_mod(const std::string& id, const std::string& source,
                       u128 d);
  std::string reveal_to(const std::string& id, uint16_t who,
                        const std::string& source);
  std::string mul(const std::string& id, const std::string& a,
                  const std::string& b);
  std::string jrsz(const std::string& id);
  std::string sq2pq(const std::string& id, const std::string& a);
  std::string approx_mask(const std::string& id, const std::string& num,
                          const std::string& den, const std::string& mask,
                          u128 d, u128 parties);
  std::string zero_poll(const std::string& id,
                        const std::string& private_name);

  // Left fold of ids[0] + ids[1] + ... under prefix+".s<k>"; a single id is
  // returned untouched.
  std::string chain_add(const std::string& prefix,
                        const std::vector<std::string>& ids);

  void branch(const std::string& poll_id, Plan all_zero, Plan otherwise);

 private:
  Exercise base(ExOp op, const std::string& id);
  SessionConfig cfg_;
  Plan plan_;
};

// Floor division of a shared value by a public divisor, correct to one unit:
// the result is floor(u/d) or floor(u/d)+1, exact when d divides u. Seven
// exercises: the mask dealing, the masked add, a reveal to one party, that
// party's modulus dealing, and three local fixups.
std::string emit_div_by_public(Planner& pl, const std::string& prefix,
                               const std::string& u, u128 d);

// Newton iteration toward d*e/b for a shared b in [1, divisor_bound].
// When divisor_bound exceeds d the warm-up runs at a lifted scale D = d*2^j
// (D >= divisor_bound) and rescales by the integer d*e/D before the
// precision phase. divisor_bound must not exceed d*e.
std::string emit_approx_inverse(Planner& pl, const std::string& prefix,
                                const std::string& b, u128 divisor_bound);

// Shared d*a/b via approx_inverse, one multiplication and one public
// division; the quotient carries the same d scale as every network value.
std::string emit_secure_divide(Planner& pl, const std::string& prefix,
                               const std::string& a, const std::string& b,
                               u128 divisor_bound);

// Exact-mode learning: per sum node a zero poll over the parties' local
// denominators, then per edge every party deals its numerator and
// denominator contributions, the shares are summed and divided. Degenerate
// nodes (all local denominators zero) fall back to public uniform weights.
// Weight ids are "w.<node>.<edge>"; private inputs are "st.num.<node>.<edge>"
// and "st.den.<node>".
void emit_learn_exact(Planner& pl, const SpnGraph& spn,
                      uint64_t divisor_bound);

// Approximate-mode learning: per edge one JRSZ mask and one local rounded
// share. A party with a zero local denominator rejects the exercise.
void emit_learn_approximate(Planner& pl, const SpnGraph& spn);

// Private marginal inference for two leaf configurations dealt by the
// client: "q.xe.<var>.<pol>" and "q.e.<var>.<pol>" (pol: "p" or "n").
// Evaluates the network bottom-up on shares and reveals both root values to
// the client only.
struct InferIds {
  std::string out_xe;
  std::string out_e;
};
InferIds emit_infer(Planner& pl, const SpnGraph& spn);

// The id every learner binds for edge j of sum node i.
std::string weight_id(uint32_t node, size_t edge);

// Leaf configuration id dealt by the client for configuration cfg ("xe" or
// "e"), variable var and polarity (true = positive literal).
std::string leaf_config_id(const std::string& cfg, uint32_t var,
                           bool positive);

}  // namespace spnmpc
