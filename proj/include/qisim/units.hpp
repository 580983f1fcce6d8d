#pragma once

#include <numbers>

namespace qisim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Ordinary frequency (Hz) <-> angular frequency (rad/s).
constexpr double hz_to_rad(double hz) { return kTwoPi * hz; }
constexpr double rad_to_hz(double rad) { return rad / kTwoPi; }

} // namespace qisim
