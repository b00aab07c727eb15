#include "rmss/doppler.hpp"

#include <cmath>

namespace rmss {

double range(const RadarPoint& p) {
  return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
}

double azimuth(const RadarPoint& p) {
  if (p.x == 0.0 && p.y == 0.0) {
    throw DataError("azimuth undefined for point at sensor origin");
  }
  return std::atan2(p.y, p.x);
}

void validate_scan(const RadarScan& scan) {
  if (!std::isfinite(scan.ego_vx) || !std::isfinite(scan.ego_vy)) {
    throw DataError("non-finite ego velocity");
  }
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const RadarPoint& p = scan.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.v_raw) || !std::isfinite(p.v_comp) ||
        !std::isfinite(p.rcs)) {
      throw DataError("non-finite point field at index " + std::to_string(i));
    }
    if (range(p) <= 0.0) {
      throw DataError("point at sensor origin at index " + std::to_string(i));
    }
  }
}

RadarScan compensate_doppler(RadarScan scan) {
  validate_scan(scan);
  for (RadarPoint& p : scan.points) {
    const double r = range(p);
    const double radial_ego = (scan.ego_vx * p.x + scan.ego_vy * p.y) / r;
    p.v_comp = p.v_raw + radial_ego;
  }
  return scan;
}

}  // namespace rmss
