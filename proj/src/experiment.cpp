#include "rmss/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "rmss/dpr.hpp"
#include "rmss/rng.hpp"

namespace rmss::eval {

namespace {

// Runs fn(0..n-1) on up to max_threads workers; each index is independent
// and writes only its own output slot, so results do not depend on timing.
void parallel_for(std::size_t n, int max_threads, const std::function<void(std::size_t)>& fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  const std::size_t workers =
      std::min<std::size_t>({n, static_cast<std::size_t>(std::max(1, max_threads)),
                             static_cast<std::size_t>(hw > 0 ? hw : 1)});
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

std::string variant_name(train::Ablation a) {
  return "pretrained_" + train::to_string(a);
}

}  // namespace

double Report::median_moving(const std::string& variant, double fraction) const {
  std::vector<double> vals;
  for (const ReportRow& r : rows) {
    if (r.variant == variant && std::abs(r.fraction - fraction) < 1e-12) {
      vals.push_back(r.test_iou.moving);
    }
  }
  return median(vals);
}

Report run_experiment(const synth::SequenceDataset& dataset,
                      const ExperimentConfig& config) {
  const DatasetSplits splits = split_dataset(dataset);

  // One pretraining run per variant; independent and parallel.
  std::vector<train::PretrainResult> pretrained(config.variants.size());
  parallel_for(config.variants.size(), config.max_threads, [&](std::size_t i) {
    train::PretrainConfig pc = config.pretrain;
    pc.ablation = config.variants[i];
    pretrained[i] = train::pretrain(splits.train, pc);
  });

  struct Cell {
    std::string variant;
    const nn::ModelState* init;
    double fraction;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double fraction : config.fractions) {
    for (std::uint64_t seed : config.seeds) {
      if (config.include_scratch) {
        cells.push_back({"scratch", nullptr, fraction, seed});
      }
      for (std::size_t v = 0; v < config.variants.size(); ++v) {
        cells.push_back({variant_name(config.variants[v]), &pretrained[v].model,
                         fraction, seed});
      }
    }
  }

  Report report;
  report.rows.resize(cells.size());
  parallel_for(cells.size(), config.max_threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    train::FinetuneConfig fc = config.finetune;
    fc.label_fraction = cell.fraction;
    fc.seed = cell.seed;
    fc.split_seed = derive_seed(config.finetune.split_seed, cell.seed);
    const train::FinetuneResult ft =
        train::finetune(cell.init, splits.train, splits.val, fc);
    ReportRow row;
    row.variant = cell.variant;
    row.fraction = cell.fraction;
    row.seed = cell.seed;
    row.test_iou = train::evaluate_model(ft.model, splits.test);
    report.rows[i] = std::move(row);
  });

  if (config.include_dpr_baseline) {
    IouAccumulator acc;
    for (const synth::Sequence& seq : splits.test.sequences) {
      for (const RadarScan& scan : seq.scans) {
        if (scan.size() == 0) continue;
        dpr::RansacParams rp = config.pretrain.ransac_params;
        MotionMask pred;
        try {
          pred = dpr::segment_dpr(scan, rp);
        } catch (const PipelineError&) {
          pred.flags.assign(scan.size(), Motion::Static);
        }
        acc.add(pred, nn::gt_mask(scan));
      }
    }
    ReportRow row;
    row.variant = "dpr_baseline";
    row.fraction = 0.0;  // label-free
    row.seed = 0;
    row.test_iou = acc.result();
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string report_to_csv(const Report& report) {
  std::string out = "variant,fraction,seed,iou_moving,iou_static,iou_mean\n";
  char buf[160];
  for (const ReportRow& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%llu,%.17g,%.17g,%.17g\n",
                  r.variant.c_str(), r.fraction,
                  static_cast<unsigned long long>(r.seed), r.test_iou.moving,
                  r.test_iou.stationary, r.test_iou.mean);
    out += buf;
  }
  return out;
}

Report report_from_csv(const std::string& csv) {
  Report report;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty report");
  if (line != "variant,fraction,seed,iou_moving,iou_static,iou_mean") {
    throw DataError("unexpected report header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    ReportRow row;
    std::getline(ss, row.variant, ',');
    std::getline(ss, field, ',');
    row.fraction = std::stod(field);
    std::getline(ss, field, ',');
    row.seed = std::stoull(field);
    std::getline(ss, field, ',');
    row.test_iou.moving = std::stod(field);
    std::getline(ss, field, ',');
    row.test_iou.stationary = std::stod(field);
    std::getline(ss, field, ',');
    row.test_iou.mean = std::stod(field);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string report_to_table(const Report& report) {
  std::map<std::pair<std::string, double>, std::vector<const ReportRow*>> cells;
  for (const ReportRow& r : report.rows) {
    cells[{r.variant, r.fraction}].push_back(&r);
  }
  std::ostringstream out;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-24s %9s %6s %10s %10s %10s\n", "variant",
                "fraction", "seeds", "moving", "static", "mean");
  out << buf;
  out << std::string(74, '-') << "\n";
  for (const auto& [key, rows] : cells) {
    std::vector<double> mv, st, mn;
    for (const ReportRow* r : rows) {
      mv.push_back(r->test_iou.moving);
      st.push_back(r->test_iou.stationary);
      mn.push_back(r->test_iou.mean);
    }
    std::snprintf(buf, sizeof(buf), "%-24s %9.4g %6zu %10.4f %10.4f %10.4f\n",
                  key.first.c_str(), key.second, rows.size(), median(mv),
                  median(st), median(mn));
    out << buf;
  }
  return out.str();
}

std::string report_to_svg(const Report& report) {
  // Median moving IoU per (variant, fraction); one polyline per variant.
  std::map<std::string, std::map<double, std::vector<double>>> series;
  for (const ReportRow& r : report.rows) {
    if (r.fraction <= 0.0) continue;  // skip label-free baseline rows
    series[r.variant][r.fraction].push_back(r.test_iou.moving);
  }

  const double width = 640, height = 420;
  const double ml = 64, mr = 24, mt = 28, mb = 48;
  double xmin = 1e9, xmax = -1e9;
  for (const auto& [variant, pts] : series) {
    for (const auto& [f, vals] : pts) {
      xmin = std::min(xmin, f);
      xmax = std::max(xmax, f);
    }
  }
  if (series.empty() || xmin >= xmax) {
    xmin = 0.01;
    xmax = 1.0;
  }
  const double lx0 = std::log10(xmin), lx1 = std::log10(xmax);
  auto sx = [&](double f) {
    return ml + (std::log10(f) - lx0) / (lx1 - lx0 + 1e-12) * (width - ml - mr);
  };
  auto sy = [&](double v) { return height - mb - v * (height - mt - mb); };

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
      << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; i += 2) {
    const double v = i / 10.0;
    svg << "<line x1=\"" << ml - 4 << "\" y1=\"" << sy(v) << "\" x2=\"" << ml
        << "\" y2=\"" << sy(v) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(v) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << v << "</text>\n";
  }
  std::set<double> fracs;
  for (const auto& [variant, pts] : series) {
    for (const auto& [f, vals] : pts) fracs.insert(f);
  }
  for (double f : fracs) {
    svg << "<line x1=\"" << sx(f) << "\" y1=\"" << height - mb << "\" x2=\""
        << sx(f) << "\" y2=\"" << height - mb + 4 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << sx(f) << "\" y=\"" << height - mb + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << f * 100 << "%</text>\n";
  }
  svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">label fraction</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (mt + height - mb) / 2 << ")\">moving IoU</text>\n";

  int ci = 0;
  double legend_y = mt + 8;
  for (const auto& [variant, pts] : series) {
    const char* color = colors[ci % 5];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (const auto& [f, vals] : pts) {
      svg << sx(f) << "," << sy(median(vals)) << " ";
    }
    svg << "\"/>\n";
    for (const auto& [f, vals] : pts) {
      svg << "<circle cx=\"" << sx(f) << "\" cy=\"" << sy(median(vals))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    svg << "<rect x=\"" << width - mr - 170 << "\" y=\"" << legend_y - 9
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << width - mr - 152 << "\" y=\"" << legend_y + 2
        << "\" font-size=\"11\">" << variant << "</text>\n";
    legend_y += 18;
    ++ci;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace rmss::eval
