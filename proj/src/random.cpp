#include "alicesays/random.hpp"

#include "sodium_init.hpp"

#include <algorithm>
#include <cstring>

namespace alicesays {

void SystemRandom::fill(std::span<std::uint8_t> out) {
  detail::ensure_sodium();
  randombytes_buf(out.data(), out.size());
}

DeterministicRandom::DeterministicRandom(const std::array<std::uint8_t, 32>& key)
    : key_(key) {}

DeterministicRandom::DeterministicRandom(std::uint64_t seed) : key_{} {
  for (int i = 0; i < 8; ++i) key_[i] = static_cast<std::uint8_t>(seed >> (8 * i));
}

void DeterministicRandom::refill() {
  static constexpr std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES>
      kNonce{};
  block_.fill(0);
  crypto_stream_chacha20_ietf_xor_ic(block_.data(), block_.data(), block_.size(),
                                     kNonce.data(), counter_++, key_.data());
  used_ = 0;
}

void DeterministicRandom::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (used_ == block_.size()) refill();
    const std::size_t n = std::min(out.size() - done, block_.size() - used_);
    std::memcpy(out.data() + done, block_.data() + used_, n);
    used_ += n;
    done += n;
  }
}

}  // namespace alicesays
