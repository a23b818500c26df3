#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace iqm {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is identified by the 64-bit master seed and a 64-bit stream key;
/// the n-th 64-bit draw is a pure function of (seed, key, n). Child streams are
/// derived with split(), so a trial's randomness depends only on its position
/// in the (action, branch, trial) hierarchy and never on scheduling.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed = 0, std::uint64_t key = 0) : seed_(seed), key_(key) {}

  /// Independent child stream labelled by `label`.
  SeededStream split(std::uint64_t label) const;

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t draws() const noexcept { return counter_; }

  /// "seed:key" in hex, for reports.
  std::string descriptor() const;

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Raw Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

}  // namespace iqm
