#pragma once

#include <cmath>
#include <numbers>

namespace cathkin {

inline constexpr double kPi = std::numbers::pi;

/// Wrap an angle to [-pi, pi).
inline double wrap_to_pi(double angle) {
    double a = std::fmod(angle + kPi, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a - kPi;
}

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

}  // namespace cathkin
