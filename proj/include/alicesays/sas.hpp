#pragma once

#include <chrono>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alicesays/bytes.hpp"
#include "alicesays/frame.hpp"
#include "alicesays/random.hpp"

namespace alicesays::channel {
class Transport;
}

namespace alicesays::sas {

inline constexpr int kDefaultOobBits = 30;
inline constexpr int kMaxOobBits = 256;

namespace tag {
inline constexpr std::string_view kCommit = "alicesays/v1/commit";
inline constexpr std::string_view kOob = "alicesays/v1/oob";
inline constexpr std::string_view kSessionKey = "alicesays/v1/session-key";
}  // namespace tag

/// SHA-256 over `tag || parts...`.
Digest tagged_hash(std::string_view tag,
                   std::initializer_list<std::span<const std::uint8_t>> parts);

struct Opening {
  Bytes payload;
  Nonce nonce{};
};

struct Commitment {
  Digest value{};
  Opening opening;
};

Commitment commit(std::span<const std::uint8_t> payload, const Nonce& nonce);
bool verify_open(const Digest& value, std::span<const std::uint8_t> payload,
                 const Nonce& nonce);

/// Throws InvalidInput unless 0 < n <= kMaxOobBits and n is even.
void validate_oob_bits(int n);

class OobString {
 public:
  OobString() = default;
  explicit OobString(std::vector<bool> bits) : bits_(std::move(bits)) {}
  /// Parses a string of '0'/'1' characters.
  static OobString parse(std::string_view text);

  std::size_t size() const noexcept { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<bool>& bits() const noexcept { return bits_; }
  std::string to_string() const;

  bool operator==(const OobString&) const = default;

 private:
  std::vector<bool> bits_;
};

struct PairingTranscript {
  Bytes pk_initiator;
  Bytes pk_responder;
  Nonce nonce_initiator{};
  Nonce nonce_responder{};
  int oob_bits = kDefaultOobBits;
};

/// First oob_bits bits (most significant bit of each byte first) of
/// H(kOob || pk_i || pk_r || (n_i XOR n_r)).
OobString derive_oob(const PairingTranscript& t);

struct KeyPair {
  Bytes public_key;
  Bytes secret_key;
};

class KeyAgreement {
 public:
  virtual ~KeyAgreement() = default;
  virtual std::string_view name() const noexcept = 0;
  virtual std::size_t public_key_size() const noexcept = 0;
  virtual KeyPair generate(RandomSource& rng) const = 0;
  virtual Bytes public_from_secret(std::span<const std::uint8_t> secret) const = 0;
  /// Throws ProtocolAbort on malformed or degenerate peer keys.
  virtual Bytes shared_secret(std::span<const std::uint8_t> secret,
                              std::span<const std::uint8_t> peer_public) const = 0;
};

class X25519 final : public KeyAgreement {
 public:
  std::string_view name() const noexcept override { return "x25519"; }
  std::size_t public_key_size() const noexcept override { return 32; }
  KeyPair generate(RandomSource& rng) const override;
  Bytes public_from_secret(std::span<const std::uint8_t> secret) const override;
  Bytes shared_secret(std::span<const std::uint8_t> secret,
                      std::span<const std::uint8_t> peer_public) const override;
};

const KeyAgreement& default_key_agreement();

struct PairingConfig {
  int oob_bits = kDefaultOobBits;
  std::chrono::milliseconds timeout{5000};
  const KeyAgreement* kex = nullptr;  // null selects X25519

  const KeyAgreement& key_agreement() const {
    return kex ? *kex : default_key_agreement();
  }
};

enum class PairingRole { Initiator, Responder };

struct PairingResult {
  Digest session_key{};
  OobString oob;
  PairingTranscript transcript;
};

/// Message-driven half of the commit / respond / open flow. The caller moves
/// frames; the handshake never touches a channel.
class Handshake {
 public:
  virtual ~Handshake() = default;
  /// First frame this role sends unprompted, if any.
  virtual std::optional<channel::Frame> start() = 0;
  /// Throws ProtocolAbort on unexpected or malformed input.
  virtual std::optional<channel::Frame> on_frame(const channel::Frame& f) = 0;
  virtual bool complete() const noexcept = 0;
  virtual PairingRole role() const noexcept = 0;
  /// Throws InvalidState before completion.
  virtual const PairingResult& result() const = 0;
};

std::unique_ptr<Handshake> make_handshake(PairingRole role,
                                          const PairingConfig& config,
                                          RandomSource& rng);

/// Runs one side of the pairing over `channel`, ignoring Control frames.
/// Errors: Timeout / ClosedPeer from the channel, ProtocolAbort on a failed
/// commitment opening or malformed peer message.
PairingResult run_pairing(PairingRole role, channel::Transport& channel,
                          const PairingConfig& config, RandomSource& rng);
PairingResult run_pairing(PairingRole role, channel::Transport& channel,
                          const PairingConfig& config);

}  // namespace alicesays::sas
