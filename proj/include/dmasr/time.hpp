// Copyright 2026 The dmasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace dmasr {

/// A point or span on a recording timeline, stored as a whole number of
/// hundredths of a second. All interval arithmetic, sorting and DER sweeps
/// run on the integer tick count, so they are exact.
class Time {
 public:
  using rep = std::int64_t;
  static constexpr rep kTicksPerSecond = 100;

  constexpr Time() = default;

  static constexpr Time from_ticks(rep ticks) { return Time(ticks); }

  /// Nearest tick, ties away from zero.
  static Time from_seconds(double seconds) {
    // The nudge keeps decimal literals such as 1.005 (stored as 1.00499..)
    // on the tie side they were written on.
    const double scaled = seconds * kTicksPerSecond;
    return Time(static_cast<rep>(std::llround(scaled + (scaled >= 0 ? 1e-7 : -1e-7))));
  }

  constexpr rep ticks() const { return ticks_; }
  constexpr double seconds() const { return static_cast<double>(ticks_) / kTicksPerSecond; }

  constexpr Time operator+(Time o) const { return Time(ticks_ + o.ticks_); }
  constexpr Time operator-(Time o) const { return Time(ticks_ - o.ticks_); }
  constexpr Time& operator+=(Time o) {
    ticks_ += o.ticks_;
    return *this;
  }
  constexpr Time& operator-=(Time o) {
    ticks_ -= o.ticks_;
    return *this;
  }

  constexpr auto operator<=>(const Time&) const = default;

 private:
  constexpr explicit Time(rep ticks) : ticks_(ticks) {}
  rep ticks_ = 0;
};

constexpr Time min(Time a, Time b) { return a < b ? a : b; }
constexpr Time max(Time a, Time b) { return a < b ? b : a; }

/// Parses a decimal seconds field ("3.20", "12", "-0.5", "1e-2").
/// Throws std::invalid_argument when the text is not a finite number.
Time parse_seconds(std::string_view text);

/// Exactly two decimals, e.g. "3.20".
std::string format_seconds(Time t);

}  // namespace dmasr
