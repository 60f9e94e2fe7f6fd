#include "alicesays/adversary.hpp"

#include <algorithm>
#include <deque>

namespace alicesays::channel {

namespace {

constexpr Millis kPumpPoll{20};

Direction reverse(Direction d) {
  return d == Direction::AtoB ? Direction::BtoA : Direction::AtoB;
}

}  // namespace

const char* to_string(AdversaryPolicy::Mode m) noexcept {
  switch (m) {
    case AdversaryPolicy::Mode::Passive: return "passive";
    case AdversaryPolicy::Mode::MitmSubstitute: return "mitm";
    case AdversaryPolicy::Mode::CorruptBits: return "corrupt";
    case AdversaryPolicy::Mode::Drop: return "drop";
  }
  return "unknown";
}

Adversary::Adversary(AdversaryPolicy policy, sas::PairingConfig config)
    : policy_(std::move(policy)), config_(config), rng_(policy_.rng_seed) {}

std::vector<Routed> Adversary::on_frame(Direction dir, const Frame& f) {
  const std::uint32_t index = next_index_++;
  log_.push_back({index, dir, f});

  using Mode = AdversaryPolicy::Mode;
  switch (policy_.mode) {
    case Mode::Passive:
      return {{dir, f}};
    case Mode::Drop:
      if (std::find(policy_.drops.begin(), policy_.drops.end(), index) !=
          policy_.drops.end())
        return {};
      return {{dir, f}};
    case Mode::CorruptBits: {
      Frame out = f;
      for (const BitFlip& flip : policy_.flips) {
        if (flip.frame_index != index || flip.bit >= out.payload.size() * 8) continue;
        out.payload[flip.bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (flip.bit % 8));
      }
      return {{dir, std::move(out)}};
    }
    case Mode::MitmSubstitute:
      return mitm(dir, f);
  }
  return {};
}

std::vector<Routed> Adversary::mitm(Direction dir, const Frame& f) {
  if (f.type == MsgType::Control) return {{dir, f}};
  std::vector<Routed> out;
  try {
    if (f.type == MsgType::Commit && !initiator_side_) {
      // The sender of Commit is the initiator; dir points away from it.
      initiator_side_ = dir;
      as_responder_ = sas::make_handshake(sas::PairingRole::Responder, config_, rng_);
      as_initiator_ = sas::make_handshake(sas::PairingRole::Initiator, config_, rng_);
      if (auto commit = as_initiator_->start()) out.push_back({dir, *commit});
      if (auto respond = as_responder_->on_frame(f)) out.push_back({reverse(dir), *respond});
    } else if (initiator_side_ && f.type == MsgType::Respond &&
               dir == reverse(*initiator_side_)) {
      if (auto open = as_initiator_->on_frame(f)) out.push_back({*initiator_side_, *open});
    } else if (initiator_side_ && f.type == MsgType::Open && dir == *initiator_side_) {
      as_responder_->on_frame(f);
    }
  } catch (const Error& e) {
    failure_ = e;
  }
  return out;
}

Interposer::Interposer(AdversaryPolicy policy, Transport& a_side, Transport& b_side,
                       sas::PairingConfig config)
    : a_(a_side), b_(b_side), adversary_(std::move(policy), config) {
  a_to_b_ = std::thread([this] { pump(Direction::AtoB); });
  b_to_a_ = std::thread([this] { pump(Direction::BtoA); });
}

Interposer::~Interposer() { stop(); }

void Interposer::stop() {
  stop_ = true;
  if (a_to_b_.joinable()) a_to_b_.join();
  if (b_to_a_.joinable()) b_to_a_.join();
}

std::vector<LoggedFrame> Interposer::transcript() const {
  std::lock_guard lock(mu_);
  return adversary_.transcript();
}

void Interposer::pump(Direction dir) {
  Transport& src = dir == Direction::AtoB ? a_ : b_;
  while (!stop_) {
    Frame f;
    try {
      f = src.recv(kPumpPoll);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Timeout) continue;
      // Peer gone: propagate the hang-up to the other victim.
      a_.close();
      b_.close();
      return;
    }
    std::lock_guard lock(mu_);
    route(adversary_.on_frame(dir, f));
  }
}

void Interposer::route(std::vector<Routed> out) {
  for (auto& r : out) {
    try {
      (r.dir == Direction::AtoB ? b_ : a_).send(r.frame);
    } catch (const Error&) {
      // Closed peers surface through the pumps.
    }
  }
}

InterposedTransport::InterposedTransport(AdversaryPolicy policy, TransportPtr inner,
                                         sas::PairingConfig config)
    : inner_(std::move(inner)) {
  auto [outer, relay_end] = make_memory_pair();
  outer_ = std::move(outer);
  relay_end_ = std::move(relay_end);
  relay_ = std::make_unique<Interposer>(std::move(policy), *relay_end_, *inner_, config);
}

InterposedTransport::~InterposedTransport() {
  relay_.reset();
}

void InterposedTransport::send(const Frame& f) { outer_->send(f); }
Frame InterposedTransport::recv(Millis timeout) { return outer_->recv(timeout); }
void InterposedTransport::close() { outer_->close(); }

std::unique_ptr<InterposedTransport> interpose(const AdversaryPolicy& policy,
                                               TransportPtr inner,
                                               sas::PairingConfig config) {
  return std::make_unique<InterposedTransport>(policy, std::move(inner), config);
}

InProcessPairing pair_in_process(const sas::PairingConfig& config,
                                 RandomSource& initiator_rng,
                                 RandomSource& responder_rng, Adversary* adversary) {
  InProcessPairing out;
  auto init = sas::make_handshake(sas::PairingRole::Initiator, config, initiator_rng);
  auto resp = sas::make_handshake(sas::PairingRole::Responder, config, responder_rng);

  std::deque<Routed> wire;
  if (auto first = init->start()) wire.push_back({Direction::AtoB, *first});

  auto deliver = [&](const Routed& r) {
    const bool to_responder = r.dir == Direction::AtoB;
    auto& party = to_responder ? resp : init;
    auto& failed = to_responder ? out.responder_error : out.initiator_error;
    if (failed) return;
    try {
      if (auto reply = party->on_frame(r.frame)) wire.push_back({reverse(r.dir), *reply});
    } catch (const Error& e) {
      failed = e;
    }
  };

  while (!wire.empty()) {
    Routed next = std::move(wire.front());
    wire.pop_front();
    if (adversary) {
      for (const auto& r : adversary->on_frame(next.dir, next.frame)) deliver(r);
    } else {
      deliver(next);
    }
  }

  if (!out.initiator_error) {
    if (init->complete()) out.initiator = init->result();
    else out.initiator_error = Error(ErrorCode::Timeout, "initiator never completed");
  }
  if (!out.responder_error) {
    if (resp->complete()) out.responder = resp->result();
    else out.responder_error = Error(ErrorCode::Timeout, "responder never completed");
  }
  return out;
}

}  // namespace alicesays::channel
