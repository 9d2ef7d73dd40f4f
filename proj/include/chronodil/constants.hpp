#pragma once

namespace chronodil::constants {

inline constexpr double hbar = 1.054571817e-34;            // J s
inline constexpr double c = 299792458.0;                   // m/s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double electron_mass = 9.1093837015e-31;  // kg
inline constexpr double standard_gravity = 9.81;           // m/s^2
inline constexpr double pi = 3.141592653589793238462643383279502884;

}  // namespace chronodil::constants
