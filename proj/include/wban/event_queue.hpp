#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wban/time.hpp"

namespace wban {

/// Min-heap of timed events. Equal timestamps dequeue in insertion order.
template <typename T>
class EventQueue {
 public:
  struct Entry {
    VirtualTime time;
    T event;
  };

  /// Throws std::logic_error when `at` precedes the current virtual time.
  void schedule(VirtualTime at, T event) {
    if (at < now_) {
      throw std::logic_error("event scheduled at " + std::to_string(at.ticks) +
                             " ms, before current time " + std::to_string(now_.ticks) + " ms");
    }
    heap_.push_back({at, next_seq_++, std::move(event)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
  }

  /// Pops the earliest event and advances the clock to it. Empty when the
  /// queue has drained, which terminates a run.
  std::optional<Entry> next() {
    if (heap_.empty()) return std::nullopt;
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Slot slot = std::move(heap_.back());
    heap_.pop_back();
    now_ = slot.time;
    return Entry{slot.time, std::move(slot.event)};
  }

  VirtualTime now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Slot {
    VirtualTime time;
    std::uint64_t seq;
    T event;
  };
  struct Later {
    bool operator()(const Slot& a, const Slot& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  std::vector<Slot> heap_;
  std::uint64_t next_seq_ = 0;
  VirtualTime now_{0};
};

}  // namespace wban
