#include <doctest.h>

#include <cmath>
#include <thread>

#include "alicesays/adversary.hpp"
#include "alicesays/error.hpp"
#include "alicesays/sim.hpp"

using namespace alicesays;
using namespace alicesays::channel;
using namespace std::chrono_literals;

namespace {

struct Outcome {
  std::optional<sas::PairingResult> initiator, responder;
  std::optional<Error> initiator_error, responder_error;
};

// Initiator talks through the interposer; responder sits on the far end.
Outcome pair_through(const AdversaryPolicy& policy, int bits = 30,
                     std::vector<LoggedFrame>* transcript = nullptr) {
  sas::PairingConfig cfg;
  cfg.oob_bits = bits;
  cfg.timeout = 300ms;
  auto [a, b] = make_memory_pair();
  auto wrapped = interpose(policy, std::move(a), cfg);
  Outcome out;
  std::thread t([&] {
    try {
      out.initiator = sas::run_pairing(sas::PairingRole::Initiator, *wrapped, cfg);
    } catch (const Error& e) {
      out.initiator_error = e;
      wrapped->close();
    }
  });
  try {
    out.responder = sas::run_pairing(sas::PairingRole::Responder, *b, cfg);
  } catch (const Error& e) {
    out.responder_error = e;
    b->close();
  }
  t.join();
  if (transcript) *transcript = wrapped->transcript();
  return out;
}

}  // namespace

TEST_CASE("passive relay is transparent and logs every frame") {
  std::vector<LoggedFrame> log;
  const auto o = pair_through(AdversaryPolicy::passive(), 30, &log);
  REQUIRE(o.initiator);
  REQUIRE(o.responder);
  CHECK(o.initiator->oob == o.responder->oob);
  REQUIRE(log.size() == 3);
  CHECK(log[0].frame.type == MsgType::Commit);
  CHECK(log[0].dir == Direction::AtoB);
  CHECK(log[1].frame.type == MsgType::Respond);
  CHECK(log[1].dir == Direction::BtoA);
  CHECK(log[2].frame.type == MsgType::Open);
}

TEST_CASE("MITM relay completes both handshakes with unrelated OOB strings") {
  const auto o = pair_through(AdversaryPolicy::mitm(11));
  REQUIRE(o.initiator);
  REQUIRE(o.responder);
  CHECK(o.initiator->session_key != o.responder->session_key);
  CHECK(o.initiator->oob != o.responder->oob);
}

TEST_CASE("a flipped bit in the commitment aborts the pairing") {
  const auto o = pair_through(AdversaryPolicy::corrupt({{0, 5}}));
  REQUIRE(o.responder_error);
  CHECK(o.responder_error->code() == ErrorCode::ProtocolAbort);
  CHECK_FALSE(o.responder);
}

TEST_CASE("a flipped bit in the response key changes the derived strings") {
  const auto o = pair_through(AdversaryPolicy::corrupt({{1, 3}}));
  if (o.initiator && o.responder) {
    CHECK(o.initiator->session_key != o.responder->session_key);
  } else {
    CHECK((o.initiator_error || o.responder_error));
  }
}

TEST_CASE("a dropped opening leaves the responder timing out") {
  const auto o = pair_through(AdversaryPolicy::drop({2}));
  CHECK(o.initiator);
  REQUIRE(o.responder_error);
  CHECK(o.responder_error->code() == ErrorCode::Timeout);
}

TEST_CASE("in-process MITM is reproducible under fixed randomness") {
  auto run = [] {
    DeterministicRandom ri(1), rr(2);
    Adversary adv(AdversaryPolicy::mitm(3), {});
    return pair_in_process({}, ri, rr, &adv);
  };
  const auto x = run(), y = run();
  REQUIRE(x.both_succeeded());
  CHECK(x.initiator->oob == y.initiator->oob);
  CHECK(x.responder->oob == y.responder->oob);
  CHECK(x.initiator->oob != x.responder->oob);
}

TEST_CASE("MITM with a faithful user never completes and always reaches the prompt") {
  sim::BatchSpec spec;
  spec.sessions = 500;
  spec.user = sim::UserModel::faithful();
  spec.scenario = sim::Scenario::Mitm;
  const auto s = sim::run_batch(spec, 99);
  CHECK(s.completed == 0);
  CHECK(s.aborted == 500);
}

TEST_CASE("MITM OOB collisions at N=8 occur near 2^-8") {
  sim::BatchSpec spec;
  spec.sessions = 4000;
  spec.user = sim::UserModel::faithful();
  spec.scenario = sim::Scenario::Mitm;
  spec.config.oob_bits = 8;
  const auto s = sim::run_batch(spec, 5);
  const double p = 1.0 / 256;
  const double sigma = std::sqrt(p * (1 - p) / spec.sessions);
  CHECK(std::abs(static_cast<double>(s.oob_collisions) / spec.sessions - p) <= 3 * sigma);
  // A colliding pair is indistinguishable from an honest one to the game.
  CHECK(s.completed == s.oob_collisions);
}
