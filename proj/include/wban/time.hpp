#pragma once

#include <chrono>
#include <compare>
#include <cstdint>

namespace wban {

/// Span of virtual time. One tick is one millisecond.
using Duration = std::chrono::milliseconds;

/// Point on the simulator's virtual clock, in milliseconds since run start.
struct VirtualTime {
  std::uint64_t ticks = 0;

  constexpr auto operator<=>(const VirtualTime&) const = default;

  static constexpr VirtualTime from(Duration since_start) {
    return VirtualTime{static_cast<std::uint64_t>(since_start.count())};
  }

  constexpr Duration since_start() const {
    return Duration{static_cast<Duration::rep>(ticks)};
  }
};

constexpr VirtualTime operator+(VirtualTime t, Duration d) {
  return VirtualTime{t.ticks + static_cast<std::uint64_t>(d.count())};
}

constexpr Duration operator-(VirtualTime a, VirtualTime b) {
  return Duration{static_cast<Duration::rep>(a.ticks) -
                  static_cast<Duration::rep>(b.ticks)};
}

}  // namespace wban
