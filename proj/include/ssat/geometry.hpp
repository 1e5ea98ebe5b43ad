// Copyright 2026 The ssat Authors
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

#ifndef SSAT_GEOMETRY_HPP_
#define SSAT_GEOMETRY_HPP_

#include <cmath>

namespace ssat
{

// 2-D map-frame position in meters.
struct Waypoint
{
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Waypoint &, const Waypoint &) = default;
};

inline Waypoint operator+(const Waypoint & a, const Waypoint & b)
{
  return {a.x + b.x, a.y + b.y};
}
inline Waypoint operator-(const Waypoint & a, const Waypoint & b)
{
  return {a.x - b.x, a.y - b.y};
}
inline Waypoint operator*(double k, const Waypoint & a)
{
  return {k * a.x, k * a.y};
}

inline double dot(const Waypoint & a, const Waypoint & b)
{
  return a.x * b.x + a.y * b.y;
}
inline double norm(const Waypoint & a)
{
  return std::hypot(a.x, a.y);
}
inline double distance(const Waypoint & a, const Waypoint & b)
{
  return norm(a - b);
}

// Unit vector pointing to the driver's right of `v` (rotation by -90 degrees).
inline Waypoint perp_right(const Waypoint & v)
{
  return {v.y, -v.x};
}

// Rotate `v` counterclockwise by `angle` radians.
inline Waypoint rotated(const Waypoint & v, double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {v.x * c - v.y * s, v.x * s + v.y * c};
}

}  // namespace ssat

#endif  // SSAT_GEOMETRY_HPP_
