#pragma once

#include <cmath>
#include <utility>

#include "xg/types.hpp"

namespace xg {

// Distance (feet) and angle (degrees) from the shot location to the center
// of the attacked goal mouth at (89, 0). atan2(|y|, 89-x), so shots from
// below the goal line come out above 90 degrees.
inline std::pair<double, double> compute_geometry(double x_std, double y_std) {
  const double dx = rink::kGoalLineX - x_std;
  const double dist = std::hypot(dx, y_std);
  const double angle = std::atan2(std::fabs(y_std), dx) * 180.0 / M_PI;
  return {dist, angle};
}

// Flip into the frame where the shooting team attacks +x. Point reflection
// through center ice, so the attacked net lands at (+89, 0).
inline std::pair<double, double> standardize_coords(double x, double y,
                                                    bool attacks_positive_x) {
  if (attacks_positive_x) return {x, y};
  return {-x, -y};
}

}  // namespace xg
