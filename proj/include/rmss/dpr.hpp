#pragma once

#include <cstdint>

#include "rmss/types.hpp"

namespace rmss::dpr {

/// Coefficients of the stationary-world velocity profile
/// v(theta) = a*cos(theta) + b*sin(theta).
struct VelocityProfile {
  double a = 0.0;
  double b = 0.0;
  int inlier_count = 0;
  int n_iterations_used = 0;
};

struct RansacParams {
  double threshold = 0.5;                // m/s, deviation that flags a mover
  int max_iterations = 200;
  double min_azimuth_separation = 1e-3;  // radians, guards singular samples
  std::uint64_t seed = 0;
  bool use_compensated = false;          // fit v_comp instead of v_raw

  void validate() const;  // throws ArgError
};

/// RANSAC fit of the azimuth-Doppler profile. Throws InsufficientPoints for
/// N < 2 and DegenerateGeometry when no sample pair is angularly usable.
VelocityProfile fit_velocity_profile(const RadarScan& scan,
                                     const RansacParams& params);

/// Flags every point deviating from the fitted profile by more than the
/// threshold as moving. N in {0, 1} falls back to an all-static mask.
MotionMask segment_dpr(const RadarScan& scan, const RansacParams& params);

}  // namespace rmss::dpr
