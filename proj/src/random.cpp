#include "spnmpc/random.hpp"

#include "spnmpc/errors.hpp"
#include "spnmpc/field.hpp"

namespace spnmpc {

uint64_t SystemRandom::next_u64() {
  // std::random_device yields 32-bit words on this platform.
  uint64_t hi = dev_();
  uint64_t lo = dev_();
  return (hi << 32) | (lo & 0xffffffffu);
}

uint64_t ScriptedRandom::next_u64() {
  if (!tape_.empty()) {
    uint64_t v = tape_.front();
    tape_.pop_front();
    return v;
  }
  if (fallback_) return fallback_->next_u64();
  throw RandomnessError("scripted randomness tape exhausted");
}

u128 sample_bounded(u128 bound, RandomSource& rng) {
  if (bound == 0) throw ConfigError("sample_bounded with zero bound");
  if (bound == 1) return 0;
  int bits = bit_length(bound - 1);
  // Draw exactly `bits` random bits and reject values >= bound; succeeds
  // with probability > 1/2 per round, so the cap is never hit in practice.
  for (int attempt = 0; attempt < 256; ++attempt) {
    u128 v = 0;
    int got = 0;
    while (got < bits) {
      v |= static_cast<u128>(rng.next_u64()) << got;
      got += 64;
    }
    if (bits < 128) v &= (static_cast<u128>(1) << bits) - 1;
    if (v < bound) return v;
  }
  throw RandomnessError("rejection sampling cap exceeded");
}

uint64_t derive_seed(uint64_t master, uint16_t party) {
  // splitmix64 over master + party; distinct parties get independent streams.
  uint64_t z = master + 0x9e3779b97f4a7c15ull * (party + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace spnmpc
