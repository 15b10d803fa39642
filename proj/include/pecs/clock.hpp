#pragma once

#include <chrono>
#include <cstdint>
#include <functional>

namespace pecs {

/// Milliseconds since the Unix epoch, UTC.
using Millis = std::int64_t;
using Clock = std::function<Millis()>;

inline Millis system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace pecs
