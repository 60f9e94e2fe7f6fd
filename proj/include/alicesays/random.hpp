#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace alicesays {

class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  template <std::size_t N>
  std::array<std::uint8_t, N> draw() {
    std::array<std::uint8_t, N> a{};
    fill(a);
    return a;
  }
};

// Operating-system CSPRNG.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// ChaCha20 keystream under a 32-byte key with an all-zero IETF nonce.
/// Used wherever a reproducible run is required (simulation, test vectors);
/// never for live pairing.
class DeterministicRandom final : public RandomSource {
 public:
  explicit DeterministicRandom(const std::array<std::uint8_t, 32>& key);
  /// Key is the 8 little-endian bytes of `seed` followed by zeros.
  explicit DeterministicRandom(std::uint64_t seed);

  void fill(std::span<std::uint8_t> out) override;

 private:
  void refill();

  std::array<std::uint8_t, 32> key_;
  std::array<std::uint8_t, 64> block_{};
  std::uint32_t counter_ = 0;
  std::size_t used_ = 64;
};

}  // namespace alicesays
