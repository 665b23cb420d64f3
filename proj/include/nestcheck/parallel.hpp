#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace nestcheck {

/// Fixed set of worker threads draining a FIFO of jobs.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void submit(std::function<void()> job);
  std::size_t size() const noexcept { return threads_.size(); }

 private:
  void loop();

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

/// Applies `f` to 0..n-1, possibly concurrently, and returns results in index
/// order. Items are offered to the pool, and the calling thread claims and
/// runs every item nobody has started yet, so nested calls never wait on
/// queued work. If any item throws, the exception of the lowest failing
/// index is rethrown once all items have finished.
template <class R>
std::vector<R> parallel_map(WorkerPool* pool, std::size_t n,
                            const std::function<R(std::size_t)>& f) {
  struct Slot {
    std::atomic<bool> claimed{false};
    std::optional<R> value;
    std::exception_ptr error;
  };
  struct State {
    std::function<R(std::size_t)> fn;
    std::vector<Slot> slots;
    std::mutex mutex;
    std::condition_variable cv;
    std::size_t finished = 0;

    State(std::function<R(std::size_t)> f, std::size_t n) : fn(std::move(f)), slots(n) {}

    void run(std::size_t i) {
      try {
        slots[i].value.emplace(fn(i));
      } catch (...) {
        slots[i].error = std::current_exception();
      }
      std::lock_guard lock(mutex);
      ++finished;
      cv.notify_all();
    }
    bool claim(std::size_t i) { return !slots[i].claimed.exchange(true); }
  };

  auto state = std::make_shared<State>(f, n);
  if (pool != nullptr && pool->size() > 0) {
    for (std::size_t i = 1; i < n; ++i) {
      pool->submit([state, i] {
        if (state->claim(i)) state->run(i);
      });
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (state->claim(i)) state->run(i);
  }
  {
    std::unique_lock lock(state->mutex);
    state->cv.wait(lock, [&] { return state->finished == n; });
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& slot : state->slots) {
    if (slot.error) std::rethrow_exception(slot.error);
    out.push_back(std::move(*slot.value));
  }
  return out;
}

}  // namespace nestcheck
