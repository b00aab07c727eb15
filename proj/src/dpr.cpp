#include "rmss/dpr.hpp"

#include <cmath>
#include <vector>

#include "rmss/doppler.hpp"
#include "rmss/rng.hpp"

namespace rmss::dpr {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Angular distance to the nearest multiple of pi; the 2x2 sample system is
// singular when azimuths coincide mod pi.
double separation_mod_pi(double a, double b) {
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

struct Observations {
  std::vector<double> az;
  std::vector<double> v;
};

Observations collect(const RadarScan& scan, const RansacParams& params) {
  Observations obs;
  obs.az.reserve(scan.size());
  obs.v.reserve(scan.size());
  for (const RadarPoint& p : scan.points) {
    obs.az.push_back(azimuth(p));
    obs.v.push_back(params.use_compensated ? p.v_comp : p.v_raw);
  }
  return obs;
}

// Least-squares refit of (a, b) on the given inlier set via the 2x2 normal
// equations. Returns false when the system is singular.
bool refit(const Observations& obs, const std::vector<int>& inliers, double* a,
           double* b) {
  double scc = 0.0, scs = 0.0, sss = 0.0, svc = 0.0, svs = 0.0;
  for (int i : inliers) {
    const double c = std::cos(obs.az[i]);
    const double s = std::sin(obs.az[i]);
    scc += c * c;
    scs += c * s;
    sss += s * s;
    svc += obs.v[i] * c;
    svs += obs.v[i] * s;
  }
  const double det = scc * sss - scs * scs;
  if (std::abs(det) < 1e-12) return false;
  *a = (svc * sss - svs * scs) / det;
  *b = (svs * scc - svc * scs) / det;
  return true;
}

int count_inliers(const Observations& obs, double a, double b, double t,
                  std::vector<int>* out) {
  if (out) out->clear();
  int n = 0;
  for (std::size_t i = 0; i < obs.az.size(); ++i) {
    const double pred = a * std::cos(obs.az[i]) + b * std::sin(obs.az[i]);
    if (std::abs(obs.v[i] - pred) <= t) {
      ++n;
      if (out) out->push_back(static_cast<int>(i));
    }
  }
  return n;
}

}  // namespace

void RansacParams::validate() const {
  if (threshold <= 0.0) throw ArgError("ransac threshold must be > 0");
  if (max_iterations < 1) throw ArgError("ransac max_iterations must be >= 1");
  if (min_azimuth_separation < 0.0) throw ArgError("min_azimuth_separation must be >= 0");
}

VelocityProfile fit_velocity_profile(const RadarScan& scan,
                                     const RansacParams& params) {
  params.validate();
  const int n = static_cast<int>(scan.size());
  if (n < 2) throw InsufficientPoints();

  const Observations obs = collect(scan, params);

  // Usability check up front; degenerate sample draws below are retried
  // without consuming an iteration, which would otherwise never terminate.
  bool usable = false;
  for (int i = 0; i < n && !usable; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (separation_mod_pi(obs.az[i], obs.az[j]) >= params.min_azimuth_separation) {
        usable = true;
        break;
      }
    }
  }
  if (!usable) throw DegenerateGeometry();

  Rng rng(derive_seed(params.seed, 0xd19));
  int best_inliers = -1;
  double best_a = 0.0, best_b = 0.0;
  int iterations = 0;
  const long attempt_cap = static_cast<long>(params.max_iterations) * 64;
  long attempts = 0;

  while (iterations < params.max_iterations) {
    if (++attempts > attempt_cap) break;
    const int i = rng.below_int(n);
    int j = rng.below_int(n - 1);
    if (j >= i) ++j;
    const double sep = separation_mod_pi(obs.az[i], obs.az[j]);
    if (sep < params.min_azimuth_separation) continue;  // skipped, not counted

    const double ci = std::cos(obs.az[i]), si = std::sin(obs.az[i]);
    const double cj = std::cos(obs.az[j]), sj = std::sin(obs.az[j]);
    const double det = ci * sj - si * cj;  // sin(az_j - az_i)
    if (std::abs(det) < 1e-15) continue;
    const double a = (obs.v[i] * sj - obs.v[j] * si) / det;
    const double b = (obs.v[j] * ci - obs.v[i] * cj) / det;

    ++iterations;
    const int inl = count_inliers(obs, a, b, params.threshold, nullptr);
    if (inl > best_inliers) {
      best_inliers = inl;
      best_a = a;
      best_b = b;
    }
  }
  if (best_inliers < 0) throw DegenerateGeometry();

  std::vector<int> inlier_idx;
  count_inliers(obs, best_a, best_b, params.threshold, &inlier_idx);

  VelocityProfile profile;
  profile.a = best_a;
  profile.b = best_b;
  profile.n_iterations_used = iterations;
  // Refit on the best inlier set; keep the sampled model if the inlier
  // geometry is singular (e.g. all inliers share one azimuth mod pi).
  double ra = 0.0, rb = 0.0;
  if (refit(obs, inlier_idx, &ra, &rb)) {
    profile.a = ra;
    profile.b = rb;
  }
  profile.inlier_count =
      count_inliers(obs, profile.a, profile.b, params.threshold, nullptr);
  return profile;
}

MotionMask segment_dpr(const RadarScan& scan, const RansacParams& params) {
  MotionMask mask;
  const std::size_t n = scan.size();
  if (n < 2) {
    // Stationary-world prior: too few points to fit, call everything static.
    mask.flags.assign(n, Motion::Static);
    return mask;
  }
  const VelocityProfile profile = fit_velocity_profile(scan, params);
  const Observations obs = collect(scan, params);
  mask.flags.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pred =
        profile.a * std::cos(obs.az[i]) + profile.b * std::sin(obs.az[i]);
    mask.flags.push_back(std::abs(obs.v[i] - pred) > params.threshold
                             ? Motion::Moving
                             : Motion::Static);
  }
  return mask;
}

}  // namespace rmss::dpr
