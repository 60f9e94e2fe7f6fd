#include <condition_variable>
#include <deque>
#include <mutex>

#include "alicesays/error.hpp"
#include "alicesays/transport.hpp"

namespace alicesays::channel {

namespace {

struct Shared {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Frame> queue[2];  // queue[i] holds frames destined to side i
  bool closed[2] = {false, false};
};

class MemoryEndpoint final : public Transport {
 public:
  MemoryEndpoint(std::shared_ptr<Shared> shared, int side)
      : shared_(std::move(shared)), side_(side) {}
  ~MemoryEndpoint() override { close(); }

  void send(const Frame& f) override {
    std::lock_guard lock(shared_->mu);
    if (shared_->closed[side_] || shared_->closed[1 - side_])
      throw Error(ErrorCode::ClosedPeer, "memory transport closed");
    shared_->queue[1 - side_].push_back(f);
    shared_->cv.notify_all();
  }

  Frame recv(Millis timeout) override {
    std::unique_lock lock(shared_->mu);
    auto& q = shared_->queue[side_];
    const bool ready = shared_->cv.wait_for(lock, timeout, [&] {
      return !q.empty() || shared_->closed[1 - side_] || shared_->closed[side_];
    });
    if (!q.empty()) {
      Frame f = std::move(q.front());
      q.pop_front();
      return f;
    }
    if (!ready) throw Error(ErrorCode::Timeout, "memory transport recv timed out");
    throw Error(ErrorCode::ClosedPeer, "memory transport closed");
  }

  void close() override {
    std::lock_guard lock(shared_->mu);
    shared_->closed[side_] = true;
    shared_->cv.notify_all();
  }

 private:
  std::shared_ptr<Shared> shared_;
  int side_;
};

}  // namespace

std::pair<TransportPtr, TransportPtr> make_memory_pair() {
  auto shared = std::make_shared<Shared>();
  return {std::make_unique<MemoryEndpoint>(shared, 0),
          std::make_unique<MemoryEndpoint>(shared, 1)};
}

}  // namespace alicesays::channel
