#include "rmss/io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rmss/doppler.hpp"

namespace rmss::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& content) {
  fs::path dir = path.parent_path();
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// NDJSON
// ---------------------------------------------------------------------------

std::string sequence_to_ndjson(const synth::Sequence& seq) {
  std::string out;
  json header;
  header["format_version"] = 1;
  header["seq_id"] = seq.seq_id;
  header["ego_frame_convention"] = "x-forward_y-left_z-up";
  out += header.dump();
  out += '\n';
  for (const RadarScan& scan : seq.scans) {
    json line;
    line["frame_idx"] = scan.frame_idx;
    line["ego_velocity"] = json::array({scan.ego_vx, scan.ego_vy});
    json pts = json::array();
    for (const RadarPoint& p : scan.points) {
      json row = json::array({p.x, p.y, p.z, p.v_raw, p.v_comp, p.rcs});
      if (p.gt_label.has_value()) {
        row.push_back(static_cast<int>(*p.gt_label));
      } else {
        row.push_back(nullptr);
      }
      pts.push_back(std::move(row));
    }
    line["points"] = std::move(pts);
    out += line.dump();
    out += '\n';
  }
  return out;
}

synth::Sequence sequence_from_ndjson(const std::string& text) {
  synth::Sequence seq;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  int expected_frame = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(std::string("bad NDJSON line: ") + e.what());
    }
    if (!have_header) {
      if (!j.contains("format_version") || j["format_version"].get<int>() != 1) {
        throw DataError("unsupported dataset format version");
      }
      seq.seq_id = j.at("seq_id").get<std::string>();
      have_header = true;
      continue;
    }
    RadarScan scan;
    scan.seq_id = seq.seq_id;
    scan.frame_idx = j.at("frame_idx").get<int>();
    if (scan.frame_idx != expected_frame) {
      throw DataError("frame indices not contiguous in sequence " + seq.seq_id);
    }
    ++expected_frame;
    const auto& ego = j.at("ego_velocity");
    if (!ego.is_array() || ego.size() != 2) throw DataError("bad ego_velocity");
    scan.ego_vx = ego[0].get<double>();
    scan.ego_vy = ego[1].get<double>();
    for (const auto& row : j.at("points")) {
      if (!row.is_array() || row.size() != 7) throw DataError("bad point row");
      RadarPoint p;
      p.x = row[0].get<double>();
      p.y = row[1].get<double>();
      p.z = row[2].get<double>();
      p.v_raw = row[3].get<double>();
      p.v_comp = row[4].get<double>();
      p.rcs = row[5].get<double>();
      if (!row[6].is_null()) {
        const int g = row[6].get<int>();
        if (g != 0 && g != 1) throw DataError("gt label must be 0, 1 or null");
        p.gt_label = static_cast<Motion>(g);
      }
      scan.points.push_back(p);
    }
    validate_scan(scan);
    seq.scans.push_back(std::move(scan));
    seq.meta.emplace_back();
  }
  if (!have_header) throw DataError("missing NDJSON header line");
  return seq;
}

namespace {

json scene_config_to_json(const synth::SceneConfig& c) {
  json j;
  j["n_sequences"] = c.n_sequences;
  j["frames_per_sequence"] = c.frames_per_sequence;
  j["points_static_range"] = {c.points_static_range.lo, c.points_static_range.hi};
  j["n_moving_objects_range"] = {c.n_moving_objects_range.lo,
                                 c.n_moving_objects_range.hi};
  j["points_per_object_range"] = {c.points_per_object_range.lo,
                                  c.points_per_object_range.hi};
  j["object_speed_range"] = {c.object_speed_range.lo, c.object_speed_range.hi};
  j["ego_speed_range"] = {c.ego_speed_range.lo, c.ego_speed_range.hi};
  j["doppler_noise_sigma"] = c.doppler_noise_sigma;
  j["position_noise_sigma"] = c.position_noise_sigma;
  j["ghost_point_rate"] = c.ghost_point_rate;
  j["fov_azimuth"] = c.fov_azimuth;
  j["range_limits"] = {c.range_limits.lo, c.range_limits.hi};
  j["rcs_range"] = {c.rcs_range.lo, c.rcs_range.hi};
  j["moving_threshold"] = c.moving_threshold;
  j["seed"] = c.seed;
  return j;
}

synth::SceneConfig scene_config_from_json(const json& j) {
  synth::SceneConfig c;
  c.n_sequences = j.at("n_sequences").get<int>();
  c.frames_per_sequence = j.at("frames_per_sequence").get<int>();
  auto ir = [&](const char* key) {
    return synth::IntRange{j.at(key)[0].get<int>(), j.at(key)[1].get<int>()};
  };
  auto dr = [&](const char* key) {
    return synth::Range{j.at(key)[0].get<double>(), j.at(key)[1].get<double>()};
  };
  c.points_static_range = ir("points_static_range");
  c.n_moving_objects_range = ir("n_moving_objects_range");
  c.points_per_object_range = ir("points_per_object_range");
  c.object_speed_range = dr("object_speed_range");
  c.ego_speed_range = dr("ego_speed_range");
  c.doppler_noise_sigma = j.at("doppler_noise_sigma").get<double>();
  c.position_noise_sigma = j.at("position_noise_sigma").get<double>();
  c.ghost_point_rate = j.at("ghost_point_rate").get<double>();
  c.fov_azimuth = j.at("fov_azimuth").get<double>();
  c.range_limits = dr("range_limits");
  c.rcs_range = dr("rcs_range");
  c.moving_threshold = j.at("moving_threshold").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void write_dataset(const synth::SequenceDataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["format_version"] = 1;
  manifest["n_sequences"] = ds.sequences.size();
  manifest["config"] = scene_config_to_json(ds.config);
  json files = json::array();
  for (const synth::Sequence& seq : ds.sequences) {
    const std::string filename = seq.seq_id + ".ndjson";
    std::size_t n_points = 0;
    for (const RadarScan& s : seq.scans) n_points += s.size();
    json entry;
    entry["file"] = filename;
    entry["seq_id"] = seq.seq_id;
    entry["n_frames"] = seq.scans.size();
    entry["n_points_total"] = n_points;
    files.push_back(std::move(entry));
    atomic_write(dir / filename, sequence_to_ndjson(seq));
  }
  manifest["sequences"] = std::move(files);
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

synth::SequenceDataset read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("bad manifest: " + std::string(e.what()));
  }
  if (manifest.at("format_version").get<int>() != 1) {
    throw DataError("unsupported manifest format version");
  }
  synth::SequenceDataset ds;
  ds.config = scene_config_from_json(manifest.at("config"));
  for (const auto& entry : manifest.at("sequences")) {
    const fs::path file = dir / entry.at("file").get<std::string>();
    ds.sequences.push_back(sequence_from_ndjson(read_file(file)));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

ConfigMap ConfigMap::parse_file(const fs::path& path) {
  return parse_string(read_file(path));
}

ConfigMap ConfigMap::parse_string(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ArgError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ArgError("config line " + std::to_string(line_no) + ": empty key");
    }
    if (!cfg.values_.emplace(key, value).second) {
      throw ArgError("config: duplicate key " + key);
    }
  }
  return cfg;
}

bool ConfigMap::has(const std::string& key) const {
  return values_.count(key) != 0;
}

double ConfigMap::get_double(const std::string& key, double fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing chars");
    return v;
  } catch (const std::exception&) {
    throw ArgError("config: bad numeric value for " + key + ": " + it->second);
  }
}

long long ConfigMap::get_int(const std::string& key, long long fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing chars");
    return v;
  } catch (const std::exception&) {
    throw ArgError("config: bad integer value for " + key + ": " + it->second);
  }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ArgError("config: bad boolean value for " + key + ": " + it->second);
}

std::string ConfigMap::get_string(const std::string& key, std::string fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  return it->second;
}

std::vector<double> ConfigMap::get_list(const std::string& key,
                                        std::vector<double> fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  std::vector<double> out;
  std::string token;
  std::istringstream ss(it->second);
  while (std::getline(ss, token, ',')) {
    try {
      out.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw ArgError("config: bad list value for " + key + ": " + it->second);
    }
  }
  return out;
}

void ConfigMap::finish() const {
  for (const auto& [key, value] : values_) {
    if (consumed_.count(key) == 0) {
      throw ArgError("config: unknown key " + key);
    }
  }
}

synth::SceneConfig scene_config_from(ConfigMap& cfg) {
  synth::SceneConfig c;
  c.n_sequences = static_cast<int>(cfg.get_int("synth.n_sequences", c.n_sequences));
  c.frames_per_sequence = static_cast<int>(
      cfg.get_int("synth.frames_per_sequence", c.frames_per_sequence));
  c.points_static_range.lo = static_cast<int>(
      cfg.get_int("synth.points_static_min", c.points_static_range.lo));
  c.points_static_range.hi = static_cast<int>(
      cfg.get_int("synth.points_static_max", c.points_static_range.hi));
  c.n_moving_objects_range.lo = static_cast<int>(
      cfg.get_int("synth.objects_min", c.n_moving_objects_range.lo));
  c.n_moving_objects_range.hi = static_cast<int>(
      cfg.get_int("synth.objects_max", c.n_moving_objects_range.hi));
  c.points_per_object_range.lo = static_cast<int>(
      cfg.get_int("synth.points_per_object_min", c.points_per_object_range.lo));
  c.points_per_object_range.hi = static_cast<int>(
      cfg.get_int("synth.points_per_object_max", c.points_per_object_range.hi));
  c.object_speed_range.lo = cfg.get_double("synth.object_speed_min", c.object_speed_range.lo);
  c.object_speed_range.hi = cfg.get_double("synth.object_speed_max", c.object_speed_range.hi);
  c.ego_speed_range.lo = cfg.get_double("synth.ego_speed_min", c.ego_speed_range.lo);
  c.ego_speed_range.hi = cfg.get_double("synth.ego_speed_max", c.ego_speed_range.hi);
  c.doppler_noise_sigma = cfg.get_double("synth.doppler_noise_sigma", c.doppler_noise_sigma);
  c.position_noise_sigma = cfg.get_double("synth.position_noise_sigma", c.position_noise_sigma);
  c.ghost_point_rate = cfg.get_double("synth.ghost_point_rate", c.ghost_point_rate);
  c.fov_azimuth = cfg.get_double("synth.fov_azimuth", c.fov_azimuth);
  c.range_limits.lo = cfg.get_double("synth.range_min", c.range_limits.lo);
  c.range_limits.hi = cfg.get_double("synth.range_max", c.range_limits.hi);
  c.rcs_range.lo = cfg.get_double("synth.rcs_min", c.rcs_range.lo);
  c.rcs_range.hi = cfg.get_double("synth.rcs_max", c.rcs_range.hi);
  c.moving_threshold = cfg.get_double("synth.moving_threshold", c.moving_threshold);
  c.seed = static_cast<std::uint64_t>(cfg.get_int("synth.seed", static_cast<long long>(c.seed)));
  return c;
}

cluster::ClusterParams cluster_params_from(ConfigMap& cfg) {
  cluster::ClusterParams p;
  p.min_cluster_size = static_cast<int>(
      cfg.get_int("cluster.min_cluster_size", p.min_cluster_size));
  p.cluster_selection_epsilon =
      cfg.get_double("cluster.epsilon", p.cluster_selection_epsilon);
  p.min_samples = static_cast<int>(cfg.get_int("cluster.min_samples", p.min_samples));
  p.feature_weights[0] = cfg.get_double("cluster.weight_x", p.feature_weights[0]);
  p.feature_weights[1] = cfg.get_double("cluster.weight_y", p.feature_weights[1]);
  p.feature_weights[2] = cfg.get_double("cluster.weight_z", p.feature_weights[2]);
  p.feature_weights[3] = cfg.get_double("cluster.weight_doppler", p.feature_weights[3]);
  p.use_raw_doppler = cfg.get_bool("cluster.use_raw_doppler", p.use_raw_doppler);
  return p;
}

dpr::RansacParams ransac_params_from(ConfigMap& cfg) {
  dpr::RansacParams p;
  p.threshold = cfg.get_double("ransac.threshold", p.threshold);
  p.max_iterations = static_cast<int>(
      cfg.get_int("ransac.max_iterations", p.max_iterations));
  p.min_azimuth_separation =
      cfg.get_double("ransac.min_azimuth_separation", p.min_azimuth_separation);
  p.seed = static_cast<std::uint64_t>(
      cfg.get_int("ransac.seed", static_cast<long long>(p.seed)));
  p.use_compensated = cfg.get_bool("ransac.use_compensated", p.use_compensated);
  return p;
}

nn::EncoderConfig encoder_config_from(ConfigMap& cfg) {
  nn::EncoderConfig c;
  c.k_neighbors = static_cast<int>(cfg.get_int("encoder.k_neighbors", c.k_neighbors));
  c.hidden1 = static_cast<int>(cfg.get_int("encoder.hidden1", c.hidden1));
  c.hidden2 = static_cast<int>(cfg.get_int("encoder.hidden2", c.hidden2));
  c.head_hidden = static_cast<int>(cfg.get_int("encoder.head_hidden", c.head_hidden));
  c.init_seed = static_cast<std::uint64_t>(
      cfg.get_int("encoder.init_seed", static_cast<long long>(c.init_seed)));
  return c;
}

train::PretrainConfig pretrain_config_from(ConfigMap& cfg) {
  train::PretrainConfig c;
  c.epochs = static_cast<int>(cfg.get_int("pretrain.epochs", c.epochs));
  c.batch_size = static_cast<int>(cfg.get_int("pretrain.batch_size", c.batch_size));
  c.base_lr = cfg.get_double("pretrain.lr", c.base_lr);
  c.optimizer.momentum = cfg.get_double("pretrain.momentum", c.optimizer.momentum);
  c.optimizer.weight_decay =
      cfg.get_double("pretrain.weight_decay", c.optimizer.weight_decay);
  const std::vector<double> ms =
      cfg.get_list("pretrain.milestones", {60.0, 80.0});
  c.milestones.clear();
  for (double m : ms) c.milestones.push_back(static_cast<int>(m));
  c.lr_factor = cfg.get_double("pretrain.lr_factor", c.lr_factor);
  c.ema_alpha = cfg.get_double("pretrain.ema_alpha", c.ema_alpha);
  c.ablation = train::ablation_from_string(
      cfg.get_string("pretrain.ablation", to_string(c.ablation)));
  const std::string mode = cfg.get_string("pretrain.pair_mode", "consecutive");
  if (mode == "consecutive") {
    c.pair_mode = synth::PairMode::Consecutive;
  } else if (mode == "cross_sequence") {
    c.pair_mode = synth::PairMode::CrossSequence;
  } else {
    throw ArgError("unknown pair mode: " + mode);
  }
  c.seed = static_cast<std::uint64_t>(
      cfg.get_int("pretrain.seed", static_cast<long long>(c.seed)));
  c.cluster_params = cluster_params_from(cfg);
  c.ransac_params = ransac_params_from(cfg);
  c.encoder = encoder_config_from(cfg);
  return c;
}

train::FinetuneConfig finetune_config_from(ConfigMap& cfg) {
  train::FinetuneConfig c;
  c.label_fraction = cfg.get_double("finetune.fraction", c.label_fraction);
  c.epochs = static_cast<int>(cfg.get_int("finetune.epochs", c.epochs));
  c.batch_size = static_cast<int>(cfg.get_int("finetune.batch_size", c.batch_size));
  c.base_lr = cfg.get_double("finetune.lr", c.base_lr);
  c.optimizer.weight_decay =
      cfg.get_double("finetune.weight_decay", c.optimizer.weight_decay);
  const std::vector<double> ms = cfg.get_list("finetune.milestones", {60.0, 80.0});
  c.milestones.clear();
  for (double m : ms) c.milestones.push_back(static_cast<int>(m));
  c.lr_factor = cfg.get_double("finetune.lr_factor", c.lr_factor);
  c.tversky.alpha = cfg.get_double("finetune.tversky_alpha", c.tversky.alpha);
  c.tversky.beta = cfg.get_double("finetune.tversky_beta", c.tversky.beta);
  c.tversky.gamma = cfg.get_double("finetune.tversky_gamma", c.tversky.gamma);
  c.augment = cfg.get_bool("finetune.augment", c.augment);
  c.freeze_backbone = cfg.get_bool("finetune.freeze_backbone", c.freeze_backbone);
  c.seed = static_cast<std::uint64_t>(
      cfg.get_int("finetune.seed", static_cast<long long>(c.seed)));
  c.split_seed = static_cast<std::uint64_t>(
      cfg.get_int("finetune.split_seed", static_cast<long long>(c.split_seed)));
  c.encoder = encoder_config_from(cfg);
  return c;
}

void check_unknown_keys(ConfigMap& cfg) {
  scene_config_from(cfg);
  pretrain_config_from(cfg);  // consumes cluster.*, ransac.*, encoder.* too
  finetune_config_from(cfg);
  cfg.get_list("experiment.fractions", {});
  cfg.get_list("experiment.seeds", {});
  cfg.get_bool("experiment.include_scratch", true);
  cfg.get_bool("experiment.include_dpr_baseline", true);
  cfg.get_string("experiment.variants", "");
  cfg.get_int("experiment.max_threads", 0);
  cfg.finish();
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'R', 'M', 'S', 'S'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

void append_group(std::string& out, const std::string& prefix,
                  const nn::ParamLayout& layout, const std::vector<double>& params,
                  std::uint64_t& checksum) {
  for (const nn::LayerSpec& l : layout.layers()) {
    const std::string name = prefix + "." + l.name;
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(l.dims.size()));
    for (std::size_t d : l.dims) put_u64(out, d);
    const std::size_t begin = out.size();
    out.resize(out.size() + l.count * sizeof(double));
    std::memcpy(out.data() + begin, params.data() + l.offset, l.count * sizeof(double));
    checksum = fnv1a_bytes(out.data() + begin, l.count * sizeof(double), checksum);
  }
}

void read_group(Reader& r, const std::string& prefix, const nn::ParamLayout& layout,
                std::vector<double>& params, std::uint64_t& checksum) {
  params.assign(layout.total(), 0.0);
  for (const nn::LayerSpec& l : layout.layers()) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    if (name != prefix + "." + l.name) {
      throw DataError("checkpoint layer mismatch: got " + name);
    }
    const std::uint32_t rank = r.u32();
    if (rank != l.dims.size()) throw DataError("checkpoint rank mismatch for " + name);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint64_t d = r.u64();
      if (d != l.dims[i]) throw DataError("checkpoint dim mismatch for " + name);
      count *= d;
    }
    const std::string payload = r.bytes(count * sizeof(double));
    checksum = fnv1a_bytes(payload.data(), payload.size(), checksum);
    std::memcpy(params.data() + l.offset, payload.data(), payload.size());
  }
}

}  // namespace

void save_checkpoint(const fs::path& path, const nn::ModelState& model,
                     const std::string& extra_json) {
  json echo;
  echo["encoder"] = {{"k_neighbors", model.config.k_neighbors},
                     {"hidden1", model.config.hidden1},
                     {"hidden2", model.config.hidden2},
                     {"head_hidden", model.config.head_hidden},
                     {"init_seed", model.config.init_seed}};
  echo["ema_alpha"] = model.ema_alpha;
  echo["rng_seed"] = model.rng_seed;
  echo["extra"] = json::parse(extra_json);
  const std::string echo_str = echo.dump();

  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, echo_str.size());
  out += echo_str;

  std::uint64_t checksum = 0xcbf29ce484222325ull;
  put_u32(out, 3);  // parameter groups
  append_group(out, "student", model.enc_layout, model.student, checksum);
  append_group(out, "teacher", model.enc_layout, model.teacher, checksum);
  append_group(out, "head", model.head_layout, model.head, checksum);
  put_u64(out, checksum);
  atomic_write(path, out);
}

nn::ModelState load_checkpoint(const fs::path& path, std::string* extra_json) {
  const std::string buf = read_file(path);
  Reader r{buf};
  if (r.bytes(4) != std::string(kMagic, 4)) throw DataError("bad checkpoint magic");
  if (r.u32() != kCheckpointVersion) throw DataError("bad checkpoint version");
  const std::uint64_t echo_len = r.u64();
  json echo;
  try {
    echo = json::parse(r.bytes(echo_len));
  } catch (const json::exception& e) {
    throw DataError("bad checkpoint config echo: " + std::string(e.what()));
  }

  nn::EncoderConfig cfg;
  cfg.k_neighbors = echo.at("encoder").at("k_neighbors").get<int>();
  cfg.hidden1 = echo.at("encoder").at("hidden1").get<int>();
  cfg.hidden2 = echo.at("encoder").at("hidden2").get<int>();
  cfg.head_hidden = echo.at("encoder").at("head_hidden").get<int>();
  cfg.init_seed = echo.at("encoder").at("init_seed").get<std::uint64_t>();

  nn::ModelState model = nn::ModelState::init(cfg, echo.at("rng_seed").get<std::uint64_t>(),
                                              echo.at("ema_alpha").get<double>());
  std::uint64_t checksum = 0xcbf29ce484222325ull;
  if (r.u32() != 3) throw DataError("unexpected checkpoint group count");
  read_group(r, "student", model.enc_layout, model.student, checksum);
  read_group(r, "teacher", model.enc_layout, model.teacher, checksum);
  read_group(r, "head", model.head_layout, model.head, checksum);
  if (r.u64() != checksum) throw DataError("checkpoint checksum mismatch");
  model.grad_student.assign(model.student.size(), 0.0);
  model.grad_head.assign(model.head.size(), 0.0);
  if (extra_json) *extra_json = echo.at("extra").dump();
  return model;
}

// ---------------------------------------------------------------------------
// Metrics CSV
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string pretrain_metrics_csv(const std::vector<train::EpochStats>& history) {
  std::string out = "epoch,loss,lr,skip_count,val_iou_moving,val_iou_static\n";
  for (const train::EpochStats& e : history) {
    out += std::to_string(e.epoch) + "," + fmt(e.mean_loss) + "," + fmt(e.lr) + "," +
           std::to_string(e.skipped) + ",,\n";
  }
  return out;
}

std::string finetune_metrics_csv(
    const std::vector<train::FinetuneEpochStats>& history) {
  std::string out = "epoch,loss,lr,skip_count,val_iou_moving,val_iou_static\n";
  for (const train::FinetuneEpochStats& e : history) {
    out += std::to_string(e.epoch) + "," + fmt(e.mean_loss) + "," + fmt(e.lr) + ",0," +
           fmt(e.val.moving) + "," + fmt(e.val.stationary) + "\n";
  }
  return out;
}

}  // namespace rmss::io
