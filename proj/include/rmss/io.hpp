#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rmss/cluster.hpp"
#include "rmss/dpr.hpp"
#include "rmss/nn.hpp"
#include "rmss/synth.hpp"
#include "rmss/train.hpp"

namespace rmss::io {

/// Writes content to a temp file in the target directory, then renames.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// ---------------------------------------------------------------------------
// Dataset NDJSON format: one file per sequence. Line 1 is a header object
// {format_version, seq_id, ego_frame_convention}; each following line is one
// scan {frame_idx, ego_velocity:[vx,vy], points:[[x,y,z,v_raw,v_comp,rcs,gt]]}
// with gt in {0, 1, null}. Numbers serialize with round-trip-exact precision.
// ---------------------------------------------------------------------------

std::string sequence_to_ndjson(const synth::Sequence& seq);
synth::Sequence sequence_from_ndjson(const std::string& text);

/// Writes manifest.json plus one NDJSON file per sequence into dir.
void write_dataset(const synth::SequenceDataset& ds,
                   const std::filesystem::path& dir);
synth::SequenceDataset read_dataset(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Config files: `key = value` lines with dotted section prefixes; '#' starts
// a comment. Unknown keys are errors.
// ---------------------------------------------------------------------------

class ConfigMap {
 public:
  static ConfigMap parse_file(const std::filesystem::path& path);
  static ConfigMap parse_string(const std::string& text);

  bool has(const std::string& key) const;
  double get_double(const std::string& key, double fallback);
  long long get_int(const std::string& key, long long fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::string get_string(const std::string& key, std::string fallback);
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback);

  /// Throws ArgError when any key was never consumed by a getter.
  void finish() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

synth::SceneConfig scene_config_from(ConfigMap& cfg);
cluster::ClusterParams cluster_params_from(ConfigMap& cfg);
dpr::RansacParams ransac_params_from(ConfigMap& cfg);
nn::EncoderConfig encoder_config_from(ConfigMap& cfg);
train::PretrainConfig pretrain_config_from(ConfigMap& cfg);
train::FinetuneConfig finetune_config_from(ConfigMap& cfg);

/// Consumes every key any section recognizes, then errors on the remainder.
/// One config file may carry all sections; typos still get caught.
void check_unknown_keys(ConfigMap& cfg);

// ---------------------------------------------------------------------------
// Checkpoints: magic "RMSS", u32 version, config echo (JSON), per-layer
// records (name, rank, dims, little-endian f64 payload) and a trailing
// FNV-1a checksum over the payload bytes.
// ---------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const nn::ModelState& model,
                     const std::string& extra_json = "{}");
nn::ModelState load_checkpoint(const std::filesystem::path& path,
                               std::string* extra_json = nullptr);

/// Metrics log CSV: epoch,loss,lr,skip_count,val_iou_moving,val_iou_static.
std::string pretrain_metrics_csv(const std::vector<train::EpochStats>& history);
std::string finetune_metrics_csv(const std::vector<train::FinetuneEpochStats>& history);

}  // namespace rmss::io
