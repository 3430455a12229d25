#pragma once

#include <chrono>
#include <cmath>

namespace wiploc {

/// Simulation clock tick. Integer microseconds keep event ordering exact.
using Micros = std::chrono::microseconds;

inline Micros from_ms(double ms)
{
    return Micros{static_cast<Micros::rep>(std::llround(ms * 1000.0))};
}

inline double to_ms(Micros t)
{
    return static_cast<double>(t.count()) / 1000.0;
}

} // namespace wiploc
