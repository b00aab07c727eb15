// rmss: synthetic radar scene generation, velocity-profile segmentation,
// self-supervised pretraining, fine-tuning and label-efficiency evaluation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmss/doppler.hpp"
#include "rmss/experiment.hpp"
#include "rmss/io.hpp"
#include "rmss/pseudo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadArgs = 2;
constexpr int kExitBadData = 3;
constexpr int kExitTrainAborted = 4;

rmss::io::ConfigMap load_config(const std::string& path) {
  if (path.empty()) return rmss::io::ConfigMap::parse_string("");
  return rmss::io::ConfigMap::parse_file(path);
}

int cmd_generate(const std::string& config_path, const std::string& out_dir,
                 long long seed_override) {
  rmss::io::ConfigMap cfg = load_config(config_path);
  rmss::synth::SceneConfig scene = rmss::io::scene_config_from(cfg);
  rmss::io::check_unknown_keys(cfg);
  if (seed_override >= 0) scene.seed = static_cast<std::uint64_t>(seed_override);
  const rmss::synth::SequenceDataset ds = rmss::synth::generate(scene);
  rmss::io::write_dataset(ds, out_dir);
  std::printf("wrote %zu sequences (%zu scans) to %s\n", ds.sequences.size(),
              ds.total_scans(), out_dir.c_str());
  return kExitOk;
}

int cmd_segment_dpr(const std::string& in_file, const std::string& out_file,
                    double threshold, bool use_compensated, long long seed) {
  std::ifstream in(in_file, std::ios::binary);
  if (!in) throw rmss::DataError("cannot open " + in_file);
  std::ostringstream ss;
  ss << in.rdbuf();
  const rmss::synth::Sequence seq = rmss::io::sequence_from_ndjson(ss.str());

  rmss::dpr::RansacParams params;
  params.threshold = threshold;
  params.use_compensated = use_compensated;
  if (seed >= 0) params.seed = static_cast<std::uint64_t>(seed);
  params.validate();

  std::string out;
  json header;
  header["format_version"] = 1;
  header["seq_id"] = seq.seq_id;
  header["column"] = "dpr_mask";
  out += header.dump();
  out += '\n';
  for (const rmss::RadarScan& scan : seq.scans) {
    json line;
    line["frame_idx"] = scan.frame_idx;
    json mask = json::array();
    rmss::MotionMask m;
    try {
      m = rmss::dpr::segment_dpr(scan, params);
    } catch (const rmss::PipelineError&) {
      m.flags.assign(scan.size(), rmss::Motion::Static);
    }
    for (rmss::Motion f : m.flags) mask.push_back(static_cast<int>(f));
    line["mask"] = std::move(mask);
    out += line.dump();
    out += '\n';
  }
  rmss::io::atomic_write(out_file, out);
  std::printf("wrote masks for %zu scans to %s\n", seq.scans.size(), out_file.c_str());
  return kExitOk;
}

int cmd_pretrain(const std::string& data_dir, const std::string& config_path,
                 const std::string& out_ckpt, const std::string& ablation,
                 long long epochs, long long seed) {
  rmss::io::ConfigMap cfg = load_config(config_path);
  rmss::train::PretrainConfig pc = rmss::io::pretrain_config_from(cfg);
  rmss::io::check_unknown_keys(cfg);
  if (!ablation.empty()) pc.ablation = rmss::train::ablation_from_string(ablation);
  if (epochs > 0) pc.epochs = static_cast<int>(epochs);
  if (seed >= 0) pc.seed = static_cast<std::uint64_t>(seed);

  const rmss::synth::SequenceDataset ds = rmss::io::read_dataset(data_dir);
  const rmss::eval::DatasetSplits splits = rmss::eval::split_dataset(ds);
  rmss::train::PretrainResult result = rmss::train::pretrain(splits.train, pc);

  json extra;
  extra["kind"] = "pretrain";
  extra["ablation"] = rmss::train::to_string(pc.ablation);
  extra["epochs"] = pc.epochs;
  extra["seed"] = pc.seed;
  rmss::io::save_checkpoint(out_ckpt, result.model, extra.dump());
  rmss::io::atomic_write(out_ckpt + ".metrics.csv",
                         rmss::io::pretrain_metrics_csv(result.history));
  std::printf("pretrained %d epochs; final loss %.6f; checkpoint %s\n",
              pc.epochs, result.history.back().mean_loss, out_ckpt.c_str());
  return kExitOk;
}

int cmd_finetune(const std::string& data_dir, const std::string& ckpt,
                 bool scratch, double fraction, const std::string& config_path,
                 const std::string& out_model, long long epochs, long long seed) {
  if (scratch ? !ckpt.empty() : ckpt.empty()) {
    throw rmss::ArgError("provide exactly one of --ckpt or --scratch");
  }
  rmss::io::ConfigMap cfg = load_config(config_path);
  rmss::train::FinetuneConfig fc = rmss::io::finetune_config_from(cfg);
  rmss::io::check_unknown_keys(cfg);
  fc.label_fraction = fraction;
  if (epochs > 0) fc.epochs = static_cast<int>(epochs);
  if (seed >= 0) fc.seed = static_cast<std::uint64_t>(seed);

  const rmss::synth::SequenceDataset ds = rmss::io::read_dataset(data_dir);
  const rmss::eval::DatasetSplits splits = rmss::eval::split_dataset(ds);

  rmss::nn::ModelState init;
  const rmss::nn::ModelState* init_ptr = nullptr;
  if (!scratch) {
    init = rmss::io::load_checkpoint(ckpt);
    fc.encoder = init.config;
    init_ptr = &init;
  }
  rmss::train::FinetuneResult result =
      rmss::train::finetune(init_ptr, splits.train, splits.val, fc);

  json extra;
  extra["kind"] = "finetune";
  extra["fraction"] = fc.label_fraction;
  extra["seed"] = fc.seed;
  extra["init"] = scratch ? "scratch" : "pretrained";
  extra["best_epoch"] = result.best_epoch;
  extra["n_labeled"] = result.n_labeled;
  rmss::io::save_checkpoint(out_model, result.model, extra.dump());
  rmss::io::atomic_write(out_model + ".metrics.csv",
                         rmss::io::finetune_metrics_csv(result.history));
  std::printf(
      "finetuned on %zu labeled scans; best epoch %d: val IoU moving %.4f "
      "static %.4f mean %.4f; model %s\n",
      result.n_labeled, result.best_epoch, result.best_val.moving,
      result.best_val.stationary, result.best_val.mean, out_model.c_str());
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_dir,
                 const std::string& split, const std::string& out_report) {
  const rmss::nn::ModelState model = rmss::io::load_checkpoint(model_path);
  const rmss::synth::SequenceDataset ds = rmss::io::read_dataset(data_dir);
  const rmss::eval::DatasetSplits splits = rmss::eval::split_dataset(ds);
  const rmss::synth::SequenceDataset* target = nullptr;
  if (split == "train") {
    target = &splits.train;
  } else if (split == "val") {
    target = &splits.val;
  } else if (split == "test") {
    target = &splits.test;
  } else if (split == "all") {
    target = &ds;
  } else {
    throw rmss::ArgError("unknown split: " + split);
  }
  const rmss::eval::Iou iou = rmss::train::evaluate_model(model, *target);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "variant,fraction,seed,iou_moving,iou_static,iou_mean\n"
                "model,1,0,%.17g,%.17g,%.17g\n",
                iou.moving, iou.stationary, iou.mean);
  rmss::io::atomic_write(out_report, buf);
  std::printf("split %s: IoU moving %.17g static %.17g mean %.17g\n",
              split.c_str(), iou.moving, iou.stationary, iou.mean);
  return kExitOk;
}

int cmd_inspect(const std::string& in_file, int frame, const std::string& out_file,
                double threshold) {
  std::ifstream in(in_file, std::ios::binary);
  if (!in) throw rmss::DataError("cannot open " + in_file);
  std::ostringstream ss;
  ss << in.rdbuf();
  const rmss::synth::Sequence seq = rmss::io::sequence_from_ndjson(ss.str());
  if (frame < 0 || frame >= static_cast<int>(seq.scans.size())) {
    throw rmss::ArgError("frame out of range");
  }
  const rmss::RadarScan& scan = seq.scans[frame];

  rmss::cluster::ClusterParams cp;
  rmss::dpr::RansacParams rp;
  rp.threshold = threshold;

  const rmss::ClusterLabels raw =
      rmss::cluster::hdbscan_eps(rmss::cluster::cluster_features(scan, cp), cp);
  rmss::MotionMask mask;
  try {
    mask = rmss::dpr::segment_dpr(scan, rp);
  } catch (const rmss::PipelineError&) {
    mask.flags.assign(scan.size(), rmss::Motion::Static);
  }
  auto [refined, refined_t] = rmss::pseudo::refine_clusters(raw, mask, raw, mask);

  std::string out;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const rmss::RadarPoint& p = scan.points[i];
    json line;
    line["i"] = i;
    line["x"] = p.x;
    line["y"] = p.y;
    line["z"] = p.z;
    line["v_raw"] = p.v_raw;
    line["v_comp"] = p.v_comp;
    line["rcs"] = p.rcs;
    line["azimuth"] = rmss::azimuth(p);
    if (p.gt_label.has_value()) {
      line["gt"] = static_cast<int>(*p.gt_label);
    } else {
      line["gt"] = nullptr;
    }
    line["dpr"] = static_cast<int>(mask.flags[i]);
    line["cluster"] = raw.labels[i];
    line["cluster_refined"] = refined.labels[i];
    out += line.dump();
    out += '\n';
  }
  rmss::io::atomic_write(out_file, out);
  std::printf("wrote %zu point rows to %s\n", scan.size(), out_file.c_str());
  return kExitOk;
}

int cmd_export_plot(const std::string& report_path, const std::string& out_svg) {
  std::ifstream in(report_path, std::ios::binary);
  if (!in) throw rmss::DataError("cannot open " + report_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const rmss::eval::Report report = rmss::eval::report_from_csv(ss.str());
  rmss::io::atomic_write(out_svg, rmss::eval::report_to_svg(report));
  std::printf("wrote %s\n", out_svg.c_str());
  return kExitOk;
}

int cmd_experiment(const std::string& data_dir, const std::string& config_path,
                   const std::string& out_dir) {
  rmss::io::ConfigMap cfg = load_config(config_path);
  rmss::eval::ExperimentConfig ec;
  ec.pretrain = rmss::io::pretrain_config_from(cfg);
  ec.finetune = rmss::io::finetune_config_from(cfg);
  ec.fractions = cfg.get_list("experiment.fractions", {0.01, 0.1, 1.0});
  const std::vector<double> seeds = cfg.get_list("experiment.seeds", {1, 2, 3});
  ec.seeds.clear();
  for (double s : seeds) ec.seeds.push_back(static_cast<std::uint64_t>(s));
  ec.include_scratch = cfg.get_bool("experiment.include_scratch", true);
  ec.include_dpr_baseline = cfg.get_bool("experiment.include_dpr_baseline", true);
  const std::string variants = cfg.get_string("experiment.variants", "full");
  ec.variants.clear();
  if (!variants.empty() && variants != "none") {
    std::istringstream vs(variants);
    std::string tok;
    while (std::getline(vs, tok, ',')) {
      ec.variants.push_back(rmss::train::ablation_from_string(tok));
    }
  }
  ec.max_threads = static_cast<int>(cfg.get_int("experiment.max_threads", 4));
  rmss::io::check_unknown_keys(cfg);

  const rmss::synth::SequenceDataset ds = rmss::io::read_dataset(data_dir);
  const rmss::eval::Report report = rmss::eval::run_experiment(ds, ec);

  fs::create_directories(out_dir);
  rmss::io::atomic_write(fs::path(out_dir) / "report.csv",
                         rmss::eval::report_to_csv(report));
  rmss::io::atomic_write(fs::path(out_dir) / "report.txt",
                         rmss::eval::report_to_table(report));
  rmss::io::atomic_write(fs::path(out_dir) / "report.svg",
                         rmss::eval::report_to_svg(report));
  std::printf("%s", rmss::eval::report_to_table(report).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radar moving-object segmentation with self-supervised pretraining"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
  std::string gen_config, gen_out;
  long long gen_seed = -1;
  gen->add_option("--config", gen_config, "scene config file");
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--seed", gen_seed, "seed override");

  // segment-dpr
  auto* seg = app.add_subcommand("segment-dpr", "velocity-profile motion masks");
  std::string seg_in, seg_out;
  double seg_threshold = 0.5;
  bool seg_comp = false;
  long long seg_seed = -1;
  seg->add_option("--in", seg_in, "sequence NDJSON file")->required();
  seg->add_option("--out", seg_out, "output NDJSON mask file")->required();
  seg->add_option("--threshold", seg_threshold, "profile deviation threshold, m/s");
  seg->add_flag("--use-compensated", seg_comp, "fit compensated Doppler");
  seg->add_option("--seed", seg_seed, "seed override");

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "self-supervised pretraining");
  std::string pre_data, pre_config, pre_out, pre_ablation;
  long long pre_epochs = -1, pre_seed = -1;
  pre->add_option("--data", pre_data, "dataset directory")->required();
  pre->add_option("--config", pre_config, "training config file");
  pre->add_option("--out", pre_out, "output checkpoint path")->required();
  pre->add_option("--ablation", pre_ablation, "full | no_dpr | no_clustering");
  pre->add_option("--epochs", pre_epochs, "epochs override");
  pre->add_option("--seed", pre_seed, "seed override");

  // finetune
  auto* fin = app.add_subcommand("finetune", "supervised fine-tuning");
  std::string fin_data, fin_ckpt, fin_config, fin_out;
  bool fin_scratch = false;
  double fin_fraction = 1.0;
  long long fin_epochs = -1, fin_seed = -1;
  fin->add_option("--data", fin_data, "dataset directory")->required();
  fin->add_option("--ckpt", fin_ckpt, "pretrained checkpoint");
  fin->add_flag("--scratch", fin_scratch, "train from scratch");
  fin->add_option("--fraction", fin_fraction, "labeled fraction in (0, 1]");
  fin->add_option("--config", fin_config, "training config file");
  fin->add_option("--out", fin_out, "output model path")->required();
  fin->add_option("--epochs", fin_epochs, "epochs override");
  fin->add_option("--seed", fin_seed, "seed override");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "pooled IoU of a model on a split");
  std::string ev_model, ev_data, ev_split = "test", ev_out;
  ev->add_option("--model", ev_model, "model checkpoint")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--split", ev_split, "train | val | test | all");
  ev->add_option("--out", ev_out, "output report CSV")->required();

  // inspect
  auto* ins = app.add_subcommand("inspect", "dump per-point pipeline columns");
  std::string ins_in, ins_out;
  int ins_frame = 0;
  double ins_threshold = 0.5;
  ins->add_option("--in", ins_in, "sequence NDJSON file")->required();
  ins->add_option("--frame", ins_frame, "frame index");
  ins->add_option("--out", ins_out, "output NDJSON file")->required();
  ins->add_option("--threshold", ins_threshold, "profile deviation threshold");

  // export-plot
  auto* plot = app.add_subcommand("export-plot", "SVG of IoU vs label fraction");
  std::string plot_report, plot_out;
  plot->add_option("--report", plot_report, "report CSV")->required();
  plot->add_option("--out", plot_out, "output SVG path")->required();

  // experiment
  auto* exp = app.add_subcommand("experiment", "label-efficiency experiment grid");
  std::string exp_data, exp_config, exp_out;
  exp->add_option("--data", exp_data, "dataset directory")->required();
  exp->add_option("--config", exp_config, "experiment config file");
  exp->add_option("--out", exp_out, "output report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitBadArgs;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_config, gen_out, gen_seed);
    if (seg->parsed()) {
      return cmd_segment_dpr(seg_in, seg_out, seg_threshold, seg_comp, seg_seed);
    }
    if (pre->parsed()) {
      return cmd_pretrain(pre_data, pre_config, pre_out, pre_ablation, pre_epochs,
                          pre_seed);
    }
    if (fin->parsed()) {
      return cmd_finetune(fin_data, fin_ckpt, fin_scratch, fin_fraction, fin_config,
                          fin_out, fin_epochs, fin_seed);
    }
    if (ev->parsed()) return cmd_evaluate(ev_model, ev_data, ev_split, ev_out);
    if (ins->parsed()) return cmd_inspect(ins_in, ins_frame, ins_out, ins_threshold);
    if (plot->parsed()) return cmd_export_plot(plot_report, plot_out);
    if (exp->parsed()) return cmd_experiment(exp_data, exp_config, exp_out);
  } catch (const rmss::ArgError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadArgs;
  } catch (const rmss::TrainAbort& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitTrainAborted;
  } catch (const rmss::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadData;
  }
  return kExitOk;
}
