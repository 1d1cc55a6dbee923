#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>

namespace repose {

// Bounded inter-stage queue. Default policy blocks producers when
// full; lossy mode instead drops the oldest queued item and counts it.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity, bool lossy = false)
      : capacity_(capacity), lossy_(lossy) {}

  void push(T item) {
    std::unique_lock lock(mutex_);
    if (lossy_) {
      if (items_.size() >= capacity_) {
        items_.pop_front();
        ++dropped_;
      }
    } else {
      not_full_.wait(lock, [&] { return items_.size() < capacity_; });
    }
    items_.push_back(std::move(item));
    lock.unlock();
    not_empty_.notify_one();
  }

  // Blocks until an item arrives or the queue is closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    lock.unlock();
    not_full_.notify_one();
    return item;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    not_empty_.notify_all();
  }

  long dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }

 private:
  const std::size_t capacity_;
  const bool lossy_;
  mutable std::mutex mutex_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> items_;
  bool closed_ = false;
  long dropped_ = 0;
};

}  // namespace repose
