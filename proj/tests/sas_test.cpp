#include <doctest.h>

#include <sodium.h>

#include <cmath>
#include <set>
#include <thread>

#include "alicesays/adversary.hpp"
#include "alicesays/error.hpp"
#include "alicesays/sas.hpp"
#include "alicesays/transport.hpp"

using namespace alicesays;
using namespace alicesays::sas;
using channel::Frame;
using channel::MsgType;

namespace {

Nonce nonce_from(std::uint64_t seed) {
  DeterministicRandom rng(seed);
  return rng.draw<32>();
}

// Independent SHA-256 of tag || parts via the one-shot API.
Digest reference_hash(std::string_view tag, const Bytes& body) {
  Bytes all(tag.begin(), tag.end());
  all.insert(all.end(), body.begin(), body.end());
  Digest d{};
  crypto_hash_sha256(d.data(), all.data(), all.size());
  return d;
}

}  // namespace

TEST_CASE("commitment opens with the original payload and nonce only") {
  const Bytes payload = {1, 2, 3, 4};
  const Nonce n = nonce_from(1);
  const Commitment c = commit(payload, n);
  CHECK(verify_open(c.value, payload, n));
  CHECK_FALSE(verify_open(c.value, Bytes{1, 2, 3, 5}, n));
  Nonce flipped = n;
  flipped[17] ^= 0x08;
  CHECK_FALSE(verify_open(c.value, payload, flipped));
}

TEST_CASE("empty payload commitment matches a direct digest") {
  const Nonce n = nonce_from(2);
  const Commitment c = commit({}, n);
  CHECK(c.value == reference_hash(tag::kCommit, Bytes(n.begin(), n.end())));
  CHECK(verify_open(c.value, {}, n));
}

TEST_CASE("no digest collisions over 100000 random commitments") {
  DeterministicRandom rng(3);
  std::set<Digest> seen;
  for (int i = 0; i < 100000; ++i) {
    const auto payload = rng.draw<32>();
    const auto n = rng.draw<32>();
    seen.insert(commit(payload, n).value);
  }
  CHECK(seen.size() == 100000);
}

TEST_CASE("OOB derivation is deterministic, length-exact and MSB-first") {
  PairingTranscript t;
  DeterministicRandom rng(4);
  t.pk_initiator = to_bytes(rng.draw<32>());
  t.pk_responder = to_bytes(rng.draw<32>());
  t.nonce_initiator = rng.draw<32>();
  t.nonce_responder = rng.draw<32>();
  for (int n : {2, 30, 64, 256}) {
    t.oob_bits = n;
    CHECK(derive_oob(t).size() == static_cast<std::size_t>(n));
    CHECK(derive_oob(t) == derive_oob(t));
  }

  Bytes body = t.pk_initiator;
  body.insert(body.end(), t.pk_responder.begin(), t.pk_responder.end());
  for (std::size_t i = 0; i < 32; ++i)
    body.push_back(t.nonce_initiator[i] ^ t.nonce_responder[i]);
  const Digest d = reference_hash(tag::kOob, body);
  t.oob_bits = 16;
  const OobString s = derive_oob(t);
  for (int i = 0; i < 16; ++i) CHECK(s[i] == (((d[i / 8] >> (7 - i % 8)) & 1) != 0));

  for (int bad : {0, 3, 31, 258}) {
    t.oob_bits = bad;
    CHECK_THROWS_AS(derive_oob(t), Error);
  }
}

TEST_CASE("OOB strings parse and print as bit text") {
  const auto s = OobString::parse("0110");
  CHECK(s.size() == 4);
  CHECK(s.to_string() == "0110");
  CHECK_THROWS_AS(OobString::parse("01x0"), Error);
}

TEST_CASE("X25519 rejects malformed and low-order peer keys") {
  const auto& kex = default_key_agreement();
  DeterministicRandom rng(5);
  const KeyPair kp = kex.generate(rng);
  CHECK(kp.public_key.size() == 32);
  CHECK(kex.public_from_secret(kp.secret_key) == kp.public_key);
  const auto check_abort = [&](const Bytes& peer) {
    try {
      kex.shared_secret(kp.secret_key, peer);
      FAIL("expected protocol abort");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ProtocolAbort);
    }
  };
  check_abort(Bytes(31, 9));
  check_abort(Bytes(32, 0));
}

TEST_CASE("honest pairing over a memory channel agrees on key and OOB string") {
  auto [a, b] = channel::make_memory_pair();
  PairingConfig cfg;
  PairingResult ri, rr;
  std::thread t([&, &ch = *a] { ri = run_pairing(PairingRole::Initiator, ch, cfg); });
  rr = run_pairing(PairingRole::Responder, *b, cfg);
  t.join();
  CHECK(ri.oob.size() == 30);
  CHECK(ri.oob == rr.oob);
  CHECK(ri.session_key == rr.session_key);
  CHECK(ri.transcript.pk_initiator == rr.transcript.pk_initiator);
}

TEST_CASE("pairing ignores interleaved control frames") {
  auto [a, b] = channel::make_memory_pair();
  PairingConfig cfg;
  cfg.oob_bits = 8;
  b->send(channel::make_control({"ping", "", ""}));
  PairingResult ri, rr;
  std::thread t([&, &ch = *a] { ri = run_pairing(PairingRole::Initiator, ch, cfg); });
  rr = run_pairing(PairingRole::Responder, *b, cfg);
  t.join();
  CHECK(ri.oob == rr.oob);
}

TEST_CASE("pairing times out without a peer") {
  auto [a, b] = channel::make_memory_pair();
  PairingConfig cfg;
  cfg.timeout = std::chrono::milliseconds(20);
  try {
    run_pairing(PairingRole::Responder, *b, cfg);
    FAIL("expected timeout");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Timeout);
  }
}

TEST_CASE("garbage handshake messages raise protocol-abort") {
  PairingConfig cfg;
  DeterministicRandom ri(6), rr(7);

  SUBCASE("respond with a wrong-length key aborts the initiator") {
    auto init = make_handshake(PairingRole::Initiator, cfg, ri);
    REQUIRE(init->start());
    try {
      init->on_frame(Frame{MsgType::Respond, Bytes(10, 1)});
      FAIL("expected protocol abort");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ProtocolAbort);
    }
    CHECK_FALSE(init->complete());
    CHECK_THROWS_AS(init->result(), Error);
  }

  SUBCASE("an opening that does not match the commitment aborts the responder") {
    auto init = make_handshake(PairingRole::Initiator, cfg, ri);
    auto resp = make_handshake(PairingRole::Responder, cfg, rr);
    const auto c = init->start();
    REQUIRE(c);
    CHECK_FALSE(resp->start());
    const auto r = resp->on_frame(*c);
    REQUIRE(r);
    auto open = init->on_frame(*r);
    REQUIRE(open);
    open->payload[40] ^= 1;
    try {
      resp->on_frame(*open);
      FAIL("expected protocol abort");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ProtocolAbort);
    }
    CHECK_FALSE(resp->complete());
  }

  SUBCASE("out-of-order frames abort") {
    auto resp = make_handshake(PairingRole::Responder, cfg, rr);
    CHECK_THROWS_AS(resp->on_frame(Frame{MsgType::Open, Bytes(64, 0)}), Error);
  }
}

TEST_CASE("fresh pairings produce fresh OOB strings") {
  SystemRandom sys;
  std::set<std::string> seen;
  for (int i = 0; i < 20; ++i) {
    const auto p = channel::pair_in_process(PairingConfig{}, sys, sys);
    REQUIRE(p.both_succeeded());
    seen.insert(p.initiator->oob.to_string());
  }
  CHECK(seen.size() == 20);
}

TEST_CASE("deterministic randomness is reproducible and seed-sensitive") {
  DeterministicRandom a(42), b(42), c(43);
  const auto x = a.draw<100>();
  CHECK(x == b.draw<100>());
  CHECK(x != c.draw<100>());
  // Split draws match one long draw.
  DeterministicRandom d(42);
  const auto head = d.draw<30>();
  const auto tail = d.draw<70>();
  CHECK(std::equal(head.begin(), head.end(), x.begin()));
  CHECK(std::equal(tail.begin(), tail.end(), x.begin() + 30));
}
