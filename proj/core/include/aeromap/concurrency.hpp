#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>

namespace aeromap {

/// Blocking bounded FIFO. push() blocks while full (backpressure); pop()
/// blocks while empty and returns nullopt once the queue is closed and
/// drained.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  BoundedQueue(const BoundedQueue&) = delete;
  BoundedQueue& operator=(const BoundedQueue&) = delete;

  /// Returns false if the queue was closed.
  bool push(T value) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    high_water_ = std::max(high_water_, items_.size());
    not_empty_.notify_one();
    return true;
  }

  /// Non-blocking push; false when full or closed.
  bool try_push(T value) {
    std::lock_guard lock(mutex_);
    if (closed_ || items_.size() >= capacity_) return false;
    items_.push_back(std::move(value));
    high_water_ = std::max(high_water_, items_.size());
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return value;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t high_water() const {
    std::lock_guard lock(mutex_);
    return high_water_;
  }
  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  std::size_t high_water_ = 0;
  bool closed_ = false;
};

/// Bounded reorder buffer: producers insert items tagged with a sequence
/// number in any order, the consumer pops them strictly in sequence. A
/// producer blocks while its sequence number is >= next + capacity, so the
/// item the consumer waits for can always be inserted.
template <typename T>
class OrderedBuffer {
 public:
  explicit OrderedBuffer(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  void push(std::uint64_t seq, T value) {
    std::unique_lock lock(mutex_);
    space_.wait(lock, [&] { return closed_ || seq < next_ + capacity_; });
    if (closed_) return;
    items_.emplace(seq, std::move(value));
    high_water_ = std::max(high_water_, items_.size());
    ready_.notify_all();
  }

  /// Pops item `next`; nullopt once closed and that item never arrives.
  std::optional<T> pop_next() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [&] { return closed_ || items_.contains(next_); });
    auto it = items_.find(next_);
    if (it == items_.end()) return std::nullopt;
    T value = std::move(it->second);
    items_.erase(it);
    ++next_;
    space_.notify_all();
    return value;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    space_.notify_all();
    ready_.notify_all();
  }

  std::size_t high_water() const {
    std::lock_guard lock(mutex_);
    return high_water_;
  }

 private:
  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable space_;
  std::condition_variable ready_;
  std::map<std::uint64_t, T> items_;
  std::uint64_t next_ = 0;
  std::size_t high_water_ = 0;
  bool closed_ = false;
};

/// Counting budget of compute slots shared by all stages. High-priority
/// acquirers (match/composite) are served before any low-priority one
/// (preprocess/detect) while they are waiting.
class ComputeBudget {
 public:
  enum class Priority { Low, High };

  explicit ComputeBudget(int slots) : free_(std::max(slots, 1)) {}

  void acquire(Priority p) {
    std::unique_lock lock(mutex_);
    if (p == Priority::High) {
      ++high_waiting_;
      cv_.wait(lock, [&] { return free_ > 0; });
      --high_waiting_;
    } else {
      cv_.wait(lock, [&] { return free_ > 0 && high_waiting_ == 0; });
    }
    --free_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++free_;
    }
    cv_.notify_all();
  }

  class Slot {
   public:
    Slot(ComputeBudget& b, Priority p) : budget_(b) { budget_.acquire(p); }
    ~Slot() { budget_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    ComputeBudget& budget_;
  };

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int free_;
  int high_waiting_ = 0;
};

}  // namespace aeromap
