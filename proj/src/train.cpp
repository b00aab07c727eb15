#include "rmss/train.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rmss/rng.hpp"

namespace rmss::train {

namespace {

// Stable per-scan stream id so cached pipeline results and per-scan RANSAC
// seeds do not depend on epoch order.
std::uint64_t scan_uid(int seq, int frame) {
  return static_cast<std::uint64_t>(seq) * 1000003ull +
         static_cast<std::uint64_t>(frame);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t pair_hash(const synth::PairRef& p) {
  return (static_cast<std::uint64_t>(p.seq_a) << 48) ^
         (static_cast<std::uint64_t>(p.frame_a) << 32) ^
         (static_cast<std::uint64_t>(p.seq_b) << 16) ^
         static_cast<std::uint64_t>(p.frame_b);
}

// Pseudo-label pipeline output for one sample pair; independent of the model
// parameters, so it is computed once and reused across epochs.
struct PairLabels {
  ClusterLabels labels_s;
  ClusterLabels labels_t;
  std::vector<pseudo::Match> matches;
};

MotionMask dpr_mask_for(const RadarScan& scan, const PretrainConfig& cfg) {
  dpr::RansacParams params = cfg.ransac_params;
  params.seed = derive_seed(
      cfg.ransac_params.seed,
      fnv1a(scan.seq_id) ^ static_cast<std::uint64_t>(scan.frame_idx));
  return dpr::segment_dpr(scan, params);
}

PairLabels build_pair_labels(const RadarScan& scan_s, const RadarScan& scan_t,
                             const PretrainConfig& cfg) {
  PairLabels out;
  if (cfg.ablation == Ablation::NoClustering) {
    // The two mask classes act as clusters (0 = moving, 1 = static) and are
    // cross-matched between the branches.
    const MotionMask mask_s = dpr_mask_for(scan_s, cfg);
    const MotionMask mask_t = dpr_mask_for(scan_t, cfg);
    auto to_labels = [](const MotionMask& m) {
      ClusterLabels l;
      l.refined = true;
      l.labels.reserve(m.size());
      for (Motion f : m.flags) l.labels.push_back(f == Motion::Moving ? 0 : 1);
      return l;
    };
    out.labels_s = to_labels(mask_s);
    out.labels_t = to_labels(mask_t);
    auto present = [](const ClusterLabels& l, int label) {
      return std::find(l.labels.begin(), l.labels.end(), label) != l.labels.end();
    };
    for (int ls = 0; ls < 2; ++ls) {
      for (int lt = 0; lt < 2; ++lt) {
        if (present(out.labels_s, ls) && present(out.labels_t, lt)) {
          out.matches.push_back({ls, lt, ls == lt});
        }
      }
    }
    if (out.matches.empty()) throw NoMatches();
    return out;
  }

  const ClusterLabels raw_s =
      cluster::hdbscan_eps(cluster::cluster_features(scan_s, cfg.cluster_params),
                           cfg.cluster_params);
  const ClusterLabels raw_t = pseudo::derive_teacher_labels(scan_s, raw_s, scan_t);

  if (cfg.ablation == Ablation::NoDpr) {
    // Label-based matching without motion refinement: every shared label is
    // a positive match (pure attraction).
    std::vector<int> labels_present_s, labels_present_t;
    for (int l : raw_s.labels) {
      if (l >= 0) labels_present_s.push_back(l);
    }
    for (int l : raw_t.labels) {
      if (l >= 0) labels_present_t.push_back(l);
    }
    std::sort(labels_present_s.begin(), labels_present_s.end());
    labels_present_s.erase(
        std::unique(labels_present_s.begin(), labels_present_s.end()),
        labels_present_s.end());
    std::sort(labels_present_t.begin(), labels_present_t.end());
    labels_present_t.erase(
        std::unique(labels_present_t.begin(), labels_present_t.end()),
        labels_present_t.end());
    for (int l : labels_present_s) {
      if (std::binary_search(labels_present_t.begin(), labels_present_t.end(), l)) {
        out.matches.push_back({l, l, true});
      }
    }
    if (out.matches.empty()) throw NoMatches();
    out.labels_s = raw_s;
    out.labels_t = raw_t;
    return out;
  }

  const MotionMask mask_s = dpr_mask_for(scan_s, cfg);
  const MotionMask mask_t = dpr_mask_for(scan_t, cfg);
  auto [ref_s, ref_t] = pseudo::refine_clusters(raw_s, mask_s, raw_t, mask_t);
  const pseudo::ClusterClassMap map_s = pseudo::classify_clusters(ref_s, mask_s);
  const pseudo::ClusterClassMap map_t = pseudo::classify_clusters(ref_t, mask_t);
  out.matches = pseudo::match_clusters(map_s, map_t);
  out.labels_s = std::move(ref_s);
  out.labels_t = std::move(ref_t);
  return out;
}

}  // namespace

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoDpr: return "no_dpr";
    case Ablation::NoClustering: return "no_clustering";
  }
  return "full";
}

Ablation ablation_from_string(const std::string& s) {
  if (s == "full") return Ablation::Full;
  if (s == "no_dpr") return Ablation::NoDpr;
  if (s == "no_clustering") return Ablation::NoClustering;
  throw ArgError("unknown ablation: " + s);
}

void PretrainConfig::validate() const {
  if (epochs < 1) throw ArgError("pretrain epochs must be >= 1");
  if (batch_size < 1) throw ArgError("pretrain batch_size must be >= 1");
  if (base_lr < 0.0) throw ArgError("learning rate must be >= 0");
  if (ema_alpha <= 0.0 || ema_alpha > 1.0) throw ArgError("ema alpha must be in (0, 1]");
  cluster_params.validate();
  ransac_params.validate();
}

void FinetuneConfig::validate() const {
  if (label_fraction <= 0.0 || label_fraction > 1.0) {
    throw ArgError("label_fraction must be in (0, 1]");
  }
  if (epochs < 1) throw ArgError("finetune epochs must be >= 1");
  if (batch_size < 1) throw ArgError("finetune batch_size must be >= 1");
}

PretrainResult pretrain(const synth::SequenceDataset& dataset,
                        const PretrainConfig& config) {
  config.validate();
  const std::vector<synth::PairRef> base_pairs =
      synth::pair_sampler(dataset, config.pair_mode, derive_seed(config.seed, 0));

  nn::ModelState state =
      nn::ModelState::init(config.encoder, derive_seed(config.seed, 1), config.ema_alpha);

  // The pseudo-label pipeline depends only on the input pair; cache it.
  // Cross-sequence pairs are redrawn every epoch and bypass the cache.
  std::vector<PairLabels> cache(base_pairs.size());
  std::vector<char> cache_ok(base_pairs.size(), 0);
  std::vector<char> cache_built(base_pairs.size(), 0);
  std::unordered_map<std::uint64_t, std::size_t> cache_index;
  if (config.pair_mode == synth::PairMode::Consecutive) {
    for (std::size_t i = 0; i < base_pairs.size(); ++i) {
      cache_index.emplace(pair_hash(base_pairs[i]), i);
    }
  }

  auto scan_of = [&](int seq, int frame) -> const RadarScan& {
    return dataset.sequences[seq].scans[frame];
  };

  PretrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fresh pair order per epoch, reproducible from the seed.
    std::vector<synth::PairRef> pairs = synth::pair_sampler(
        dataset, config.pair_mode, derive_seed(config.seed, 100 + epoch));
    auto pair_key = [&](const synth::PairRef& p) -> std::size_t {
      const auto it = cache_index.find(pair_hash(p));
      return it == cache_index.end() ? base_pairs.size() : it->second;
    };

    const double lr =
        nn::multistep_lr(epoch, config.base_lr, config.milestones, config.lr_factor);
    double epoch_loss = 0.0;
    int processed = 0;
    int skipped = 0;

    for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
      const std::size_t stop =
          std::min(pairs.size(), start + static_cast<std::size_t>(config.batch_size));
      state.zero_grads();
      int batch_processed = 0;
      for (std::size_t pi = start; pi < stop; ++pi) {
        const synth::PairRef& pr = pairs[pi];
        const RadarScan& scan_s = scan_of(pr.seq_a, pr.frame_a);
        const RadarScan& scan_t = scan_of(pr.seq_b, pr.frame_b);

        const std::size_t key = pair_key(pr);
        const bool cacheable = key < base_pairs.size();
        PairLabels fresh;
        const PairLabels* labels = nullptr;
        if (cacheable && cache_built[key]) {
          if (!cache_ok[key]) {
            ++skipped;
            continue;
          }
          labels = &cache[key];
        } else {
          try {
            fresh = build_pair_labels(scan_s, scan_t, config);
          } catch (const PipelineError&) {
            if (cacheable) {
              cache_built[key] = 1;
              cache_ok[key] = 0;
            }
            ++skipped;
            continue;
          }
          if (cacheable) {
            cache[key] = std::move(fresh);
            cache_built[key] = 1;
            cache_ok[key] = 1;
            labels = &cache[key];
          } else {
            labels = &fresh;
          }
        }

        nn::EncoderActivations acts;
        const RepresentationMatrix reps_s =
            nn::encoder_forward(scan_s, state.student, config.encoder, &acts);
        const RepresentationMatrix reps_t =
            nn::encoder_forward(scan_t, state.teacher, config.encoder);
        pseudo::MaclResult macl;
        try {
          macl = pseudo::macl_loss(reps_s, reps_t, labels->labels_s,
                                   labels->labels_t, labels->matches);
        } catch (const PipelineError&) {
          ++skipped;
          continue;
        }
        nn::encoder_backward(acts, macl.grad_reps_s, state.student, config.encoder,
                             state.grad_student);
        epoch_loss += macl.loss;
        ++processed;
        ++batch_processed;
      }
      if (batch_processed == 0) continue;
      const double inv = 1.0 / static_cast<double>(batch_processed);
      for (double& g : state.grad_student) g *= inv;
      nn::sgdw_step(state.student, state.grad_student, state.sgdw_student, lr,
                    config.optimizer);
      nn::ema_update(state.teacher, state.student, state.ema_alpha);
    }

    if (processed == 0) {
      throw TrainAbort("pretraining epoch " + std::to_string(epoch) +
                       ": every pair was skipped");
    }
    state.check_finite();
    result.history.push_back({epoch, epoch_loss / processed, lr, processed, skipped});
  }
  result.model = std::move(state);
  return result;
}

MotionMask predict(const nn::ModelState& model, const RadarScan& scan) {
  const RepresentationMatrix reps =
      nn::encoder_forward(scan, model.student, model.config);
  const std::vector<double> logits = nn::head_forward(reps, model.head, model.config);
  MotionMask mask;
  mask.flags.reserve(scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    mask.flags.push_back(logits[i * 2 + 1] > logits[i * 2] ? Motion::Moving
                                                           : Motion::Static);
  }
  return mask;
}

eval::Iou evaluate_model(const nn::ModelState& model,
                         const synth::SequenceDataset& ds) {
  eval::IouAccumulator acc;
  for (const synth::Sequence& seq : ds.sequences) {
    for (const RadarScan& scan : seq.scans) {
      if (scan.size() == 0) continue;
      acc.add(predict(model, scan), nn::gt_mask(scan));
    }
  }
  return acc.result();
}

FinetuneResult finetune(const nn::ModelState* init,
                        const synth::SequenceDataset& train_split,
                        const synth::SequenceDataset& val_split,
                        const FinetuneConfig& config) {
  config.validate();
  auto [labeled, rest] =
      eval::label_fraction_split(train_split, config.label_fraction, config.split_seed);
  if (labeled.empty()) throw TrainAbort("empty labeled subset");

  nn::ModelState state =
      init ? *init
           : nn::ModelState::init(config.encoder, derive_seed(config.seed, 2), 0.01);

  int batch_size = config.batch_size;
  if (labeled.size() < 64) batch_size = 8;

  auto scan_of = [&](const eval::ScanRef& r) -> const RadarScan& {
    return train_split.sequences[r.seq].scans[r.frame];
  };

  FinetuneResult result;
  result.n_labeled = labeled.size();
  std::vector<double> best_params_enc = state.student;
  std::vector<double> best_params_head = state.head;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr =
        nn::multistep_lr(epoch, config.base_lr, config.milestones, config.lr_factor);

    // Seeded shuffle of the labeled subset.
    std::vector<eval::ScanRef> order = labeled;
    Rng shuffle_rng(derive_seed(config.seed, 0x8000 + epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }

    double epoch_loss = 0.0;
    int n_batches_points = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      state.zero_grads();
      int batch_count = 0;
      for (std::size_t si = start; si < stop; ++si) {
        const RadarScan& base = scan_of(order[si]);
        if (base.size() == 0) continue;
        RadarScan scan =
            config.augment
                ? nn::augment(base,
                              derive_seed(config.seed,
                                          0xA000000ull +
                                              static_cast<std::uint64_t>(epoch) * 65536ull +
                                              scan_uid(order[si].seq, order[si].frame)))
                : base;
        const MotionMask gt = nn::gt_mask(scan);
        nn::EncoderActivations enc_acts;
        nn::HeadActivations head_acts;
        const RepresentationMatrix reps =
            nn::encoder_forward(scan, state.student, config.encoder, &enc_acts);
        const std::vector<double> logits =
            nn::head_forward(reps, state.head, config.encoder, &head_acts);
        const std::vector<double> probs = nn::softmax_probs(logits);
        const nn::TverskyResult tv = nn::focal_tversky_loss(probs, gt, config.tversky);
        std::vector<double> dreps;
        nn::head_backward(reps, head_acts, tv.grad_logits, state.head, config.encoder,
                          state.grad_head, config.freeze_backbone ? nullptr : &dreps);
        if (!config.freeze_backbone) {
          nn::encoder_backward(enc_acts, dreps, state.student, config.encoder,
                               state.grad_student);
        }
        epoch_loss += tv.loss;
        ++batch_count;
      }
      if (batch_count == 0) continue;
      const double inv = 1.0 / static_cast<double>(batch_count);
      for (double& g : state.grad_head) g *= inv;
      nn::adamw_step(state.head, state.grad_head, state.adamw_head, lr, config.optimizer);
      if (!config.freeze_backbone) {
        for (double& g : state.grad_student) g *= inv;
        nn::adamw_step(state.student, state.grad_student, state.adamw_student, lr,
                       config.optimizer);
      }
      n_batches_points += batch_count;
    }
    state.check_finite();

    const eval::Iou val = evaluate_model(state, val_split);
    const double mean_loss =
        n_batches_points > 0 ? epoch_loss / n_batches_points : 0.0;
    result.history.push_back({epoch, mean_loss, lr, val});
    if (result.best_epoch < 0 || val.mean > result.best_val.mean) {
      result.best_epoch = epoch;
      result.best_val = val;
      best_params_enc = state.student;
      best_params_head = state.head;
    }
  }

  state.student = std::move(best_params_enc);
  state.teacher = state.student;
  state.head = std::move(best_params_head);
  result.model = std::move(state);
  return result;
}

}  // namespace rmss::train
