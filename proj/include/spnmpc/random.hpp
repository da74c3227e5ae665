#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <random>

#include "spnmpc/int128.hpp"

namespace spnmpc {

// Uniform 64-bit word source. Protocol code never touches an engine
// directly so tests can swap in seeded or scripted tapes.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual uint64_t next_u64() = 0;
};

// OS entropy (/dev/urandom via std::random_device). Used when no seed is
// given; share values drawn from it are unpredictable to the other parties.
class SystemRandom : public RandomSource {
 public:
  uint64_t next_u64() override;

 private:
  std::random_device dev_;
};

// Deterministic source for reproducible runs and tests.
class SeededRandom : public RandomSource {
 public:
  explicit SeededRandom(uint64_t seed) : engine_(seed) {}
  uint64_t next_u64() override { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Plays back a fixed tape of words, then falls through to an optional
// backing source. Lets tests pin the exact masks a dealer draws.
class ScriptedRandom : public RandomSource {
 public:
  explicit ScriptedRandom(std::deque<uint64_t> tape,
                          std::unique_ptr<RandomSource> fallback = nullptr)
      : tape_(std::move(tape)), fallback_(std::move(fallback)) {}
  uint64_t next_u64() override;

 private:
  std::deque<uint64_t> tape_;
  std::unique_ptr<RandomSource> fallback_;
};

// Uniform draw from [0, bound) by rejection on the bit length of bound-1,
// so every value is equally likely. bound == 0 is a ConfigError.
u128 sample_bounded(u128 bound, RandomSource& rng);

// Stable per-party seed derivation from a session master seed.
uint64_t derive_seed(uint64_t master, uint16_t party);

}  // namespace spnmpc
