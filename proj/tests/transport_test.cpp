#include <doctest.h>

#include <thread>

#include "alicesays/error.hpp"
#include "alicesays/transport.hpp"

using namespace alicesays;
using namespace alicesays::channel;
using namespace std::chrono_literals;

namespace {

Frame numbered(std::uint32_t seq, MsgType type = MsgType::Commit) {
  return Frame{type, {static_cast<std::uint8_t>(seq >> 24), static_cast<std::uint8_t>(seq >> 16),
                      static_cast<std::uint8_t>(seq >> 8), static_cast<std::uint8_t>(seq)}};
}

std::uint32_t seq_of(const Frame& f) {
  return (std::uint32_t{f.payload[0]} << 24) | (std::uint32_t{f.payload[1]} << 16) |
         (std::uint32_t{f.payload[2]} << 8) | f.payload[3];
}

void exercise(Transport& a, Transport& b) {
  const Frame f{MsgType::Open, Bytes(64, 0x5a)};
  a.send(f);
  CHECK(b.recv(1s) == f);

  try {
    b.recv(10ms);
    FAIL("expected timeout");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Timeout);
  }

  constexpr std::uint32_t kCount = 1000;
  std::thread writer([&] {
    for (std::uint32_t i = 0; i < kCount; ++i) a.send(numbered(i));
  });
  for (std::uint32_t i = 0; i < kCount; ++i) {
    b.send(numbered(i, MsgType::Respond));
    CHECK(seq_of(b.recv(2s)) == i);
  }
  writer.join();
  for (std::uint32_t i = 0; i < kCount; ++i) {
    const Frame got = a.recv(2s);
    CHECK(got.type == MsgType::Respond);
    CHECK(seq_of(got) == i);
  }
}

}  // namespace

TEST_CASE("memory transport: loopback, timeout and per-direction order") {
  auto [a, b] = make_memory_pair();
  exercise(*a, *b);
}

TEST_CASE("memory transport: pending frames drain before ClosedPeer") {
  auto [a, b] = make_memory_pair();
  a->send(numbered(1));
  a->close();
  CHECK(seq_of(b->recv(100ms)) == 1);
  CHECK_THROWS_AS(b->recv(100ms), Error);
  CHECK_THROWS_AS(a->send(numbered(2)), Error);
}

TEST_CASE("socket transport: loopback, timeout and per-direction order") {
  SocketListener listener("127.0.0.1", 0);
  REQUIRE(listener.port() != 0);
  std::unique_ptr<SocketTransport> server;
  std::thread acceptor([&] { server = listener.accept(2s); });
  auto client = SocketTransport::connect("127.0.0.1", listener.port(), 2s);
  acceptor.join();
  REQUIRE(server);
  exercise(*client, *server);

  client->close();
  try {
    server->recv(500ms);
    FAIL("expected closed peer");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ClosedPeer);
  }
}

TEST_CASE("socket listener reports an occupied address as an IO error") {
  SocketListener first("127.0.0.1", 0);
  try {
    SocketListener second("127.0.0.1", first.port());
    FAIL("expected bind failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}
