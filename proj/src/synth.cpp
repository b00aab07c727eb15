#include "rmss/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rmss/doppler.hpp"
#include "rmss/rng.hpp"

namespace rmss::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct WorldPoint {
  double x, y, z;
  double rcs;
};

// Rigid template of one moving object: fixed point offsets around the center.
struct MovingObject {
  double cx, cy, cz;      // world center at spawn frame
  double vx, vy;          // world-frame velocity, planar
  int spawn_frame;
  std::vector<WorldPoint> offsets;
  bool moving;            // ground truth: speed above tau_m

  Vec2 center_at(int frame) const {
    const double t = (frame - spawn_frame) * kFrameDt;
    return {cx + vx * t, cy + vy * t};
  }
};

bool in_fov(double rel_x, double rel_y, double rel_z, const SceneConfig& cfg) {
  const double r = std::sqrt(rel_x * rel_x + rel_y * rel_y + rel_z * rel_z);
  if (r < cfg.range_limits.lo || r > cfg.range_limits.hi) return false;
  if (rel_x == 0.0 && rel_y == 0.0) return false;
  return std::abs(std::atan2(rel_y, rel_x)) <= cfg.fov_azimuth;
}

int draw_count(Rng& rng, IntRange r) {
  if (r.hi <= r.lo) return r.lo;
  return r.lo + rng.below_int(r.hi - r.lo + 1);
}

// Largest radial speed the object template reaches at this frame relative to
// the given ego position. Uses noise-free geometry.
double max_radial_speed(const MovingObject& obj, int frame, Vec2 ego_pos) {
  const Vec2 c = obj.center_at(frame);
  double best = 0.0;
  for (const WorldPoint& off : obj.offsets) {
    const double rx = c.x + off.x - ego_pos.x;
    const double ry = c.y + off.y - ego_pos.y;
    const double rz = obj.cz + off.z;
    const double r = std::sqrt(rx * rx + ry * ry + rz * rz);
    if (r <= 0.0) continue;
    best = std::max(best, std::abs((obj.vx * rx + obj.vy * ry) / r));
  }
  return best;
}

bool object_visible(const MovingObject& obj, int frame, Vec2 ego_pos,
                    const SceneConfig& cfg) {
  const Vec2 c = obj.center_at(frame);
  return in_fov(c.x - ego_pos.x, c.y - ego_pos.y, obj.cz, cfg);
}

// True while the object keeps a usable radial signature in every frame it is
// visible from spawn_frame onward.
bool radial_signature_ok(const MovingObject& obj, const std::vector<Vec2>& ego_pos,
                         int n_frames, const SceneConfig& cfg) {
  bool seen = false;
  for (int f = obj.spawn_frame; f < n_frames; ++f) {
    if (!object_visible(obj, f, ego_pos[f], cfg)) {
      if (seen) break;  // left the field of view; later frames do not count
      continue;
    }
    seen = true;
    if (max_radial_speed(obj, f, ego_pos[f]) < kMinRadialSpeed) return false;
  }
  return seen;
}

MovingObject spawn_object(Rng& rng, int frame, const std::vector<Vec2>& ego_pos,
                          int n_frames, const SceneConfig& cfg) {
  MovingObject obj;
  obj.spawn_frame = frame;

  const int n_pts = draw_count(rng, cfg.points_per_object_range);
  for (int attempt_pos = 0;; ++attempt_pos) {
    const Vec2 ego = ego_pos[frame];
    const double az = rng.uniform(-0.8 * cfg.fov_azimuth, 0.8 * cfg.fov_azimuth);
    const double range_lo = cfg.range_limits.lo + 3.0;
    const double range_hi =
        std::max(range_lo + 1.0, 0.7 * cfg.range_limits.hi);
    const double r = rng.uniform(range_lo, range_hi);
    obj.cx = ego.x + r * std::cos(az);
    obj.cy = ego.y + r * std::sin(az);
    obj.cz = rng.uniform(0.0, 0.3);

    obj.offsets.clear();
    for (int i = 0; i < n_pts; ++i) {
      WorldPoint off;
      off.x = rng.normal(0.0, 0.4);
      off.y = rng.normal(0.0, 0.4);
      off.z = rng.normal(0.0, 0.1);
      off.rcs = rng.uniform(cfg.rcs_range.lo, cfg.rcs_range.hi);
      obj.offsets.push_back(off);
    }

    const double speed =
        rng.uniform(cfg.object_speed_range.lo, cfg.object_speed_range.hi);
    obj.moving = speed > cfg.moving_threshold;

    for (int attempt_dir = 0; attempt_dir < 300; ++attempt_dir) {
      const double heading = rng.uniform(0.0, 2.0 * kPi);
      obj.vx = speed * std::cos(heading);
      obj.vy = speed * std::sin(heading);
      if (!obj.moving) {
        if (object_visible(obj, frame, ego_pos[frame], cfg)) return obj;
        break;  // reposition
      }
      if (radial_signature_ok(obj, ego_pos, n_frames, cfg)) return obj;
    }
    if (attempt_pos >= 50) {
      // Aim straight away from the sensor; radial by construction at spawn.
      const double rx = obj.cx - ego_pos[frame].x;
      const double ry = obj.cy - ego_pos[frame].y;
      const double rn = std::sqrt(rx * rx + ry * ry);
      const double speed = std::max(cfg.object_speed_range.lo, kMinRadialSpeed * 1.5);
      obj.vx = speed * rx / rn;
      obj.vy = speed * ry / rn;
      obj.moving = speed > cfg.moving_threshold;
      return obj;
    }
  }
}

Sequence generate_sequence(int seq_index, const SceneConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(seq_index)));
  const int n_frames = cfg.frames_per_sequence;

  Sequence seq;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "seq_%03d", seq_index);
  seq.seq_id = buf;

  // Ego trajectory: constant base velocity plus a small per-frame wobble.
  const double ego_speed =
      rng.uniform(cfg.ego_speed_range.lo, cfg.ego_speed_range.hi);
  const double ego_heading = rng.uniform(-kPi / 6.0, kPi / 6.0);
  const Vec2 ego_base{ego_speed * std::cos(ego_heading),
                      ego_speed * std::sin(ego_heading)};
  std::vector<Vec2> ego_vel(n_frames);
  std::vector<Vec2> ego_pos(n_frames);
  Vec2 pos{0.0, 0.0};
  for (int f = 0; f < n_frames; ++f) {
    ego_vel[f] = {ego_base.x + rng.normal(0.0, 0.02 * ego_speed),
                  ego_base.y + rng.normal(0.0, 0.02 * ego_speed)};
    ego_pos[f] = pos;
    pos.x += ego_vel[f].x * kFrameDt;
    pos.y += ego_vel[f].y * kFrameDt;
  }

  const int static_target = draw_count(rng, cfg.points_static_range);
  std::vector<WorldPoint> world;  // persistent static background

  const int n_objects = draw_count(rng, cfg.n_moving_objects_range);
  std::vector<MovingObject> objects;
  for (int i = 0; i < n_objects; ++i) {
    objects.push_back(spawn_object(rng, 0, ego_pos, n_frames, cfg));
  }

  const double ghost_doppler_max =
      cfg.ego_speed_range.hi + cfg.object_speed_range.hi + 2.0;

  for (int f = 0; f < n_frames; ++f) {
    const Vec2 ego = ego_pos[f];

    // Top up the static background so roughly static_target points stay
    // visible; world points persist, which correlates consecutive frames.
    int visible = 0;
    for (const WorldPoint& w : world) {
      if (in_fov(w.x - ego.x, w.y - ego.y, w.z, cfg)) ++visible;
    }
    for (int i = visible; i < static_target; ++i) {
      WorldPoint w;
      const double az = rng.uniform(-cfg.fov_azimuth, cfg.fov_azimuth);
      const double r = rng.uniform(cfg.range_limits.lo, cfg.range_limits.hi);
      w.x = ego.x + r * std::cos(az);
      w.y = ego.y + r * std::sin(az);
      w.z = rng.uniform(-0.25, 0.25);
      w.rcs = rng.uniform(cfg.rcs_range.lo, cfg.rcs_range.hi);
      world.push_back(w);
    }

    // Retire objects that left the field of view and replace them.
    for (MovingObject& obj : objects) {
      if (!object_visible(obj, f, ego, cfg)) {
        obj = spawn_object(rng, f, ego_pos, n_frames, cfg);
      }
    }

    RadarScan scan;
    scan.seq_id = seq.seq_id;
    scan.frame_idx = f;
    scan.ego_vx = ego_vel[f].x;
    scan.ego_vy = ego_vel[f].y;
    ScanMeta meta;

    auto emit = [&](double wx, double wy, double wz, double vx_w, double vy_w,
                    double rcs, Motion gt) -> bool {
      RadarPoint p;
      p.x = wx - ego.x + rng.normal(0.0, cfg.position_noise_sigma);
      p.y = wy - ego.y + rng.normal(0.0, cfg.position_noise_sigma);
      p.z = wz + rng.normal(0.0, cfg.position_noise_sigma);
      if (!in_fov(p.x, p.y, p.z, cfg)) return false;
      const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
      const double rel_vx = vx_w - ego_vel[f].x;
      const double rel_vy = vy_w - ego_vel[f].y;
      // Doppler derived from the stored geometry so that compensation of a
      // stationary point is exact when doppler noise is zero.
      p.v_raw = (rel_vx * p.x + rel_vy * p.y) / r;
      if (cfg.doppler_noise_sigma > 0.0) {
        p.v_raw += rng.normal(0.0, cfg.doppler_noise_sigma);
      }
      p.rcs = rcs;
      p.gt_label = gt;
      scan.points.push_back(p);
      return true;
    };

    for (const MovingObject& obj : objects) {
      const Vec2 c = obj.center_at(f);
      ScanMeta::ObjectSpan span;
      span.first = static_cast<int>(scan.points.size());
      span.vx = obj.vx;
      span.vy = obj.vy;
      for (const WorldPoint& off : obj.offsets) {
        if (emit(c.x + off.x, c.y + off.y, obj.cz + off.z, obj.vx, obj.vy,
                 off.rcs, obj.moving ? Motion::Moving : Motion::Static)) {
          ++span.count;
        }
      }
      if (span.count > 0) meta.objects.push_back(span);
    }

    for (const WorldPoint& w : world) {
      if (!in_fov(w.x - ego.x, w.y - ego.y, w.z, cfg)) continue;
      if (emit(w.x, w.y, w.z, 0.0, 0.0, w.rcs, Motion::Static)) {
        ++meta.n_static;
      }
    }

    const int n_real = static_cast<int>(scan.points.size());
    if (cfg.ghost_point_rate > 0.0 && n_real > 0) {
      const int n_ghost = static_cast<int>(std::llround(
          cfg.ghost_point_rate / (1.0 - cfg.ghost_point_rate) * n_real));
      for (int i = 0; i < n_ghost; ++i) {
        RadarPoint p;
        const double az = rng.uniform(-cfg.fov_azimuth, cfg.fov_azimuth);
        const double r = rng.uniform(cfg.range_limits.lo, cfg.range_limits.hi);
        p.x = r * std::cos(az);
        p.y = r * std::sin(az);
        p.z = rng.uniform(-0.25, 0.25);
        p.v_raw = rng.uniform(-ghost_doppler_max, ghost_doppler_max);
        p.rcs = rng.uniform(cfg.rcs_range.lo, cfg.rcs_range.hi);
        p.gt_label = Motion::Static;
        scan.points.push_back(p);
        ++meta.n_ghost;
      }
    }

    seq.scans.push_back(compensate_doppler(std::move(scan)));
    seq.meta.push_back(std::move(meta));
  }
  return seq;
}

}  // namespace

void SceneConfig::validate() const {
  auto bad = [](const char* what) { throw ArgError(std::string("scene config: ") + what); };
  if (n_sequences < 1) bad("n_sequences must be >= 1");
  if (frames_per_sequence < 1) bad("frames_per_sequence must be >= 1");
  if (points_static_range.lo < 0 || points_static_range.hi < points_static_range.lo)
    bad("points_static_range invalid");
  if (n_moving_objects_range.lo < 0 ||
      n_moving_objects_range.hi < n_moving_objects_range.lo)
    bad("n_moving_objects_range invalid");
  if (points_per_object_range.lo < 1 ||
      points_per_object_range.hi < points_per_object_range.lo)
    bad("points_per_object_range invalid");
  if (object_speed_range.hi < object_speed_range.lo) bad("object_speed_range invalid");
  if (ego_speed_range.hi < ego_speed_range.lo || ego_speed_range.lo < 0.0)
    bad("ego_speed_range invalid");
  if (doppler_noise_sigma < 0.0) bad("doppler_noise_sigma must be >= 0");
  if (position_noise_sigma < 0.0) bad("position_noise_sigma must be >= 0");
  if (ghost_point_rate < 0.0 || ghost_point_rate >= 1.0)
    bad("ghost_point_rate must be in [0, 1)");
  if (fov_azimuth <= 0.0 || fov_azimuth > kPi) bad("fov_azimuth invalid");
  if (range_limits.lo <= 0.0 || range_limits.hi <= range_limits.lo)
    bad("range_limits invalid");
  if (rcs_range.hi < rcs_range.lo) bad("rcs_range invalid");
  if (moving_threshold <= 0.0) bad("moving_threshold must be > 0");
}

std::size_t SequenceDataset::total_scans() const {
  std::size_t n = 0;
  for (const Sequence& s : sequences) n += s.scans.size();
  return n;
}

SequenceDataset generate(const SceneConfig& config) {
  config.validate();
  SequenceDataset ds;
  ds.config = config;
  ds.sequences.reserve(config.n_sequences);
  for (int s = 0; s < config.n_sequences; ++s) {
    ds.sequences.push_back(generate_sequence(s, config));
  }
  return ds;
}

std::vector<PairRef> pair_sampler(const SequenceDataset& dataset, PairMode mode,
                                  std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x9a17));
  std::vector<PairRef> pairs;

  std::size_t consecutive_total = 0;
  for (const Sequence& s : dataset.sequences) {
    if (s.scans.size() >= 2) consecutive_total += s.scans.size() - 1;
  }

  if (mode == PairMode::Consecutive) {
    for (int si = 0; si < static_cast<int>(dataset.sequences.size()); ++si) {
      const auto& scans = dataset.sequences[si].scans;
      for (int f = 0; f + 1 < static_cast<int>(scans.size()); ++f) {
        pairs.push_back({si, f, si, f + 1});
      }
    }
    if (pairs.empty()) throw PipelineError("no valid pairs");
  } else {
    std::vector<int> usable;
    for (int si = 0; si < static_cast<int>(dataset.sequences.size()); ++si) {
      if (!dataset.sequences[si].scans.empty()) usable.push_back(si);
    }
    const int n_seq = static_cast<int>(usable.size());
    if (n_seq < 2) throw PipelineError("cross-sequence pairs need at least two sequences");
    const std::size_t count =
        consecutive_total > 0 ? consecutive_total : dataset.total_scans();
    for (std::size_t i = 0; i < count; ++i) {
      const int ia = rng.below_int(n_seq);
      int ib = rng.below_int(n_seq - 1);
      if (ib >= ia) ++ib;
      const int a = usable[ia];
      const int b = usable[ib];
      const int fa = rng.below_int(static_cast<int>(dataset.sequences[a].scans.size()));
      const int fb = rng.below_int(static_cast<int>(dataset.sequences[b].scans.size()));
      pairs.push_back({a, fa, b, fb});
    }
  }

  // Seeded Fisher-Yates permutation; epoch-reproducible given the seed.
  for (std::size_t i = pairs.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(pairs[i - 1], pairs[j]);
  }
  return pairs;
}

}  // namespace rmss::synth
