#pragma once

#include <numbers>

namespace specpart {

// First positive zero of the Bessel function J0.
inline constexpr double kBesselJ01 = 2.4048255576957728;

inline constexpr double kPi = std::numbers::pi;

// pi * j01^2: first Dirichlet eigenvalue of the unit-area disk.
inline constexpr double kDiskUnitAreaLambda = kPi * kBesselJ01 * kBesselJ01;

// First Dirichlet eigenvalue of the unit-area regular hexagon, from P1 finite
// elements on the exact hexagon with Richardson extrapolation (h -> 0).
inline constexpr double kHexagonUnitAreaLambda = 18.5901;

}  // namespace specpart
