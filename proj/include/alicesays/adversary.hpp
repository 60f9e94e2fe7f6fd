#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "alicesays/error.hpp"
#include "alicesays/sas.hpp"
#include "alicesays/transport.hpp"

namespace alicesays::channel {

// Side A is whichever victim talks to the interposer's outer endpoint.
enum class Direction : std::uint8_t { AtoB, BtoA };

struct BitFlip {
  std::uint32_t frame_index = 0;  // counted over both directions, from 0
  std::uint32_t bit = 0;          // bit offset into the payload, MSB first

  bool operator==(const BitFlip&) const = default;
};

struct AdversaryPolicy {
  enum class Mode { Passive, MitmSubstitute, CorruptBits, Drop };

  Mode mode = Mode::Passive;
  std::vector<BitFlip> flips;
  std::vector<std::uint32_t> drops;
  std::uint64_t rng_seed = 0;

  static AdversaryPolicy passive() { return {}; }
  static AdversaryPolicy mitm(std::uint64_t seed) {
    return {Mode::MitmSubstitute, {}, {}, seed};
  }
  static AdversaryPolicy corrupt(std::vector<BitFlip> flips) {
    return {Mode::CorruptBits, std::move(flips), {}, 0};
  }
  static AdversaryPolicy drop(std::vector<std::uint32_t> indices) {
    return {Mode::Drop, {}, std::move(indices), 0};
  }
};

const char* to_string(AdversaryPolicy::Mode m) noexcept;

struct Routed {
  Direction dir;
  Frame frame;
};

struct LoggedFrame {
  std::uint32_t index;
  Direction dir;
  Frame frame;
};

/// Frame-level adversary. Every frame leaving a victim passes through
/// on_frame(); the returned frames are what the victims actually receive.
/// MitmSubstitute runs one sas handshake with each victim: it answers the
/// side that sent Commit as a responder and opens a fresh initiator
/// handshake toward the other side.
class Adversary {
 public:
  Adversary(AdversaryPolicy policy, sas::PairingConfig config);

  std::vector<Routed> on_frame(Direction dir, const Frame& f);

  const AdversaryPolicy& policy() const noexcept { return policy_; }
  /// Frames as received from the victims, before tampering.
  const std::vector<LoggedFrame>& transcript() const noexcept { return log_; }

  /// MITM only: results of the adversary's own handshakes.
  const sas::Handshake* with_initiator() const noexcept { return as_responder_.get(); }
  const sas::Handshake* with_responder() const noexcept { return as_initiator_.get(); }
  /// Set when one of the adversary's own handshakes failed.
  const std::optional<Error>& failure() const noexcept { return failure_; }

 private:
  std::vector<Routed> mitm(Direction dir, const Frame& f);

  AdversaryPolicy policy_;
  sas::PairingConfig config_;
  DeterministicRandom rng_;
  std::uint32_t next_index_ = 0;
  std::vector<LoggedFrame> log_;

  std::optional<Direction> initiator_side_;
  std::unique_ptr<sas::Handshake> as_responder_;
  std::unique_ptr<sas::Handshake> as_initiator_;
  std::optional<Error> failure_;
};

/// Relay agent between two endpoints: A-side frames go through the adversary
/// toward B and vice versa. Two pump threads; the adversary is serialized.
class Interposer {
 public:
  Interposer(AdversaryPolicy policy, Transport& a_side, Transport& b_side,
             sas::PairingConfig config = {});
  ~Interposer();
  Interposer(const Interposer&) = delete;
  Interposer& operator=(const Interposer&) = delete;

  void stop();
  /// Copy of the adversary transcript taken under the relay lock.
  std::vector<LoggedFrame> transcript() const;

 private:
  void pump(Direction dir);
  void route(std::vector<Routed> out);

  Transport& a_;
  Transport& b_;
  mutable std::mutex mu_;
  Adversary adversary_;
  std::atomic<bool> stop_{false};
  std::thread a_to_b_;
  std::thread b_to_a_;
};

/// Transport whose traffic toward `inner` passes through an Interposer.
class InterposedTransport final : public Transport {
 public:
  InterposedTransport(AdversaryPolicy policy, TransportPtr inner,
                      sas::PairingConfig config = {});
  ~InterposedTransport() override;

  void send(const Frame& f) override;
  Frame recv(Millis timeout) override;
  void close() override;

  std::vector<LoggedFrame> transcript() const { return relay_->transcript(); }

 private:
  TransportPtr outer_;
  TransportPtr relay_end_;
  TransportPtr inner_;
  std::unique_ptr<Interposer> relay_;
};

std::unique_ptr<InterposedTransport> interpose(const AdversaryPolicy& policy,
                                               TransportPtr inner,
                                               sas::PairingConfig config = {});

/// Both victims and an optional adversary driven to quiescence on one thread,
/// in deterministic order. The initiator is side A.
struct InProcessPairing {
  std::optional<sas::PairingResult> initiator;
  std::optional<sas::PairingResult> responder;
  std::optional<Error> initiator_error;
  std::optional<Error> responder_error;

  bool both_succeeded() const noexcept { return initiator && responder; }
};

InProcessPairing pair_in_process(const sas::PairingConfig& config,
                                 RandomSource& initiator_rng,
                                 RandomSource& responder_rng,
                                 Adversary* adversary = nullptr);

}  // namespace alicesays::channel
