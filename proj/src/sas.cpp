#include "alicesays/sas.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

#include "alicesays/error.hpp"
#include "alicesays/transport.hpp"
#include "sodium_init.hpp"

namespace alicesays::sas {

using channel::Frame;
using channel::MsgType;

Digest tagged_hash(std::string_view tag,
                   std::initializer_list<std::span<const std::uint8_t>> parts) {
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(tag.data()),
                            tag.size());
  for (auto p : parts) crypto_hash_sha256_update(&st, p.data(), p.size());
  Digest out{};
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

Commitment commit(std::span<const std::uint8_t> payload, const Nonce& nonce) {
  return {tagged_hash(tag::kCommit, {payload, nonce}), {to_bytes(payload), nonce}};
}

bool verify_open(const Digest& value, std::span<const std::uint8_t> payload,
                 const Nonce& nonce) {
  const Digest expect = tagged_hash(tag::kCommit, {payload, nonce});
  return sodium_memcmp(expect.data(), value.data(), value.size()) == 0;
}

void validate_oob_bits(int n) {
  if (n <= 0 || n % 2 != 0 || n > kMaxOobBits)
    throw Error(ErrorCode::InvalidInput,
                "OOB length must be even and in 2.." + std::to_string(kMaxOobBits) +
                    ", got " + std::to_string(n));
}

OobString OobString::parse(std::string_view text) {
  std::vector<bool> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1')
      throw Error(ErrorCode::InvalidInput, "OOB string must be made of 0 and 1");
    bits.push_back(c == '1');
  }
  return OobString(std::move(bits));
}

std::string OobString::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (bool b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

OobString derive_oob(const PairingTranscript& t) {
  validate_oob_bits(t.oob_bits);
  if (t.pk_initiator.empty() || t.pk_responder.empty())
    throw Error(ErrorCode::InvalidInput, "transcript is missing a public key");
  Nonce mixed{};
  for (std::size_t i = 0; i < mixed.size(); ++i)
    mixed[i] = t.nonce_initiator[i] ^ t.nonce_responder[i];
  const Digest d = tagged_hash(tag::kOob, {t.pk_initiator, t.pk_responder, mixed});
  std::vector<bool> bits(static_cast<std::size_t>(t.oob_bits));
  for (std::size_t i = 0; i < bits.size(); ++i)
    bits[i] = (d[i / 8] >> (7 - i % 8)) & 1;
  return OobString(std::move(bits));
}

KeyPair X25519::generate(RandomSource& rng) const {
  Bytes secret(crypto_scalarmult_SCALARBYTES);
  rng.fill(secret);
  return {public_from_secret(secret), std::move(secret)};
}

Bytes X25519::public_from_secret(std::span<const std::uint8_t> secret) const {
  if (secret.size() != crypto_scalarmult_SCALARBYTES)
    throw Error(ErrorCode::InvalidInput, "x25519 secret must be 32 bytes");
  Bytes pub(crypto_scalarmult_BYTES);
  crypto_scalarmult_base(pub.data(), secret.data());
  return pub;
}

Bytes X25519::shared_secret(std::span<const std::uint8_t> secret,
                            std::span<const std::uint8_t> peer_public) const {
  if (secret.size() != crypto_scalarmult_SCALARBYTES ||
      peer_public.size() != crypto_scalarmult_BYTES)
    throw Error(ErrorCode::ProtocolAbort, "x25519 key has wrong length");
  Bytes out(crypto_scalarmult_BYTES);
  // Fails for low-order points (all-zero output).
  if (crypto_scalarmult(out.data(), secret.data(), peer_public.data()) != 0)
    throw Error(ErrorCode::ProtocolAbort, "degenerate peer public key");
  return out;
}

const KeyAgreement& default_key_agreement() {
  static const X25519 kX25519;
  return kX25519;
}

namespace {

[[noreturn]] void abort_protocol(const std::string& why) {
  throw Error(ErrorCode::ProtocolAbort, "pairing: " + why);
}

Bytes pack(std::span<const std::uint8_t> key, const Nonce& nonce) {
  Bytes out(key.begin(), key.end());
  out.insert(out.end(), nonce.begin(), nonce.end());
  return out;
}

std::pair<Bytes, Nonce> unpack(const Frame& f, std::size_t key_size) {
  if (f.payload.size() != key_size + 32)
    abort_protocol(std::string(channel::to_string(f.type)) + " payload has wrong length");
  Nonce n{};
  std::copy(f.payload.begin() + static_cast<std::ptrdiff_t>(key_size), f.payload.end(),
            n.begin());
  return {Bytes(f.payload.begin(), f.payload.begin() + static_cast<std::ptrdiff_t>(key_size)),
          n};
}

Digest session_key(const KeyAgreement& kex, const KeyPair& own,
                   std::span<const std::uint8_t> peer_public) {
  const Bytes dh = kex.shared_secret(own.secret_key, peer_public);
  return tagged_hash(tag::kSessionKey, {dh});
}

class HandshakeBase : public Handshake {
 public:
  HandshakeBase(const PairingConfig& cfg, RandomSource& rng) : cfg_(cfg) {
    validate_oob_bits(cfg.oob_bits);
    detail::ensure_sodium();
    keys_ = cfg_.key_agreement().generate(rng);
    rng.fill(nonce_);
    transcript_.oob_bits = cfg.oob_bits;
  }

  bool complete() const noexcept override { return result_.has_value(); }

  const PairingResult& result() const override {
    if (!result_) throw Error(ErrorCode::InvalidState, "pairing not complete");
    return *result_;
  }

 protected:
  void finish(std::span<const std::uint8_t> peer_public) {
    PairingResult r;
    r.session_key = session_key(cfg_.key_agreement(), keys_, peer_public);
    r.oob = derive_oob(transcript_);
    r.transcript = transcript_;
    result_ = std::move(r);
  }

  PairingConfig cfg_;
  KeyPair keys_;
  Nonce nonce_{};
  PairingTranscript transcript_;
  std::optional<PairingResult> result_;
};

class Initiator final : public HandshakeBase {
 public:
  using HandshakeBase::HandshakeBase;

  PairingRole role() const noexcept override { return PairingRole::Initiator; }

  std::optional<Frame> start() override {
    if (started_) throw Error(ErrorCode::InvalidState, "initiator already started");
    started_ = true;
    const Commitment c = commit(keys_.public_key, nonce_);
    return Frame{MsgType::Commit, Bytes(c.value.begin(), c.value.end())};
  }

  std::optional<Frame> on_frame(const Frame& f) override {
    if (!started_ || complete()) abort_protocol("unexpected frame for initiator");
    if (f.type != MsgType::Respond)
      abort_protocol(std::string("initiator expected respond, got ") +
                     channel::to_string(f.type));
    auto [peer_pk, peer_nonce] = unpack(f, cfg_.key_agreement().public_key_size());
    transcript_.pk_initiator = keys_.public_key;
    transcript_.pk_responder = peer_pk;
    transcript_.nonce_initiator = nonce_;
    transcript_.nonce_responder = peer_nonce;
    finish(peer_pk);
    return Frame{MsgType::Open, pack(keys_.public_key, nonce_)};
  }

 private:
  bool started_ = false;
};

class Responder final : public HandshakeBase {
 public:
  using HandshakeBase::HandshakeBase;

  PairingRole role() const noexcept override { return PairingRole::Responder; }

  std::optional<Frame> start() override { return std::nullopt; }

  std::optional<Frame> on_frame(const Frame& f) override {
    if (complete()) abort_protocol("unexpected frame after completion");
    if (!commitment_) {
      if (f.type != MsgType::Commit)
        abort_protocol(std::string("responder expected commit, got ") +
                       channel::to_string(f.type));
      if (f.payload.size() != std::tuple_size_v<Digest>)
        abort_protocol("commit payload has wrong length");
      Digest d{};
      std::copy(f.payload.begin(), f.payload.end(), d.begin());
      commitment_ = d;
      return Frame{MsgType::Respond, pack(keys_.public_key, nonce_)};
    }
    if (f.type != MsgType::Open)
      abort_protocol(std::string("responder expected open, got ") +
                     channel::to_string(f.type));
    auto [peer_pk, peer_nonce] = unpack(f, cfg_.key_agreement().public_key_size());
    if (!verify_open(*commitment_, peer_pk, peer_nonce))
      abort_protocol("commitment opening does not verify");
    transcript_.pk_initiator = peer_pk;
    transcript_.pk_responder = keys_.public_key;
    transcript_.nonce_initiator = peer_nonce;
    transcript_.nonce_responder = nonce_;
    finish(peer_pk);
    return std::nullopt;
  }

 private:
  std::optional<Digest> commitment_;
};

}  // namespace

std::unique_ptr<Handshake> make_handshake(PairingRole role, const PairingConfig& config,
                                          RandomSource& rng) {
  if (role == PairingRole::Initiator) return std::make_unique<Initiator>(config, rng);
  return std::make_unique<Responder>(config, rng);
}

PairingResult run_pairing(PairingRole role, channel::Transport& ch,
                          const PairingConfig& config, RandomSource& rng) {
  auto hs = make_handshake(role, config, rng);
  if (auto first = hs->start()) ch.send(*first);
  while (!hs->complete()) {
    const Frame in = ch.recv(config.timeout);
    if (in.type == MsgType::Control) continue;
    if (auto out = hs->on_frame(in)) ch.send(*out);
  }
  return hs->result();
}

PairingResult run_pairing(PairingRole role, channel::Transport& ch,
                          const PairingConfig& config) {
  SystemRandom rng;
  return run_pairing(role, ch, config, rng);
}

}  // namespace alicesays::sas
