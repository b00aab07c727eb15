#pragma once

#include "rmss/types.hpp"

namespace rmss {

double range(const RadarPoint& p);

/// atan2(y, x) in (-pi, pi]. Throws DataError for a point at the origin.
double azimuth(const RadarPoint& p);

/// Checks finiteness of all numeric fields and that no point sits at the
/// sensor origin. Throws DataError.
void validate_scan(const RadarScan& scan);

/// Fills v_comp = v_raw + (ego_velocity . u) per point, u the unit
/// line-of-sight vector. Stationary world points end up at v_comp ~ 0.
/// v_raw is never modified. Throws DataError on invalid scans.
RadarScan compensate_doppler(RadarScan scan);

}  // namespace rmss
