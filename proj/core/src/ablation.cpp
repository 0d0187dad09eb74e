#include "atnatlas/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "atnatlas/errors.hpp"
#include "atnatlas/rng.hpp"
#include "atnatlas/training.hpp"

namespace atnatlas {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

AblationReport sweep_heads(const ModelConfig& config, const Parameters& params,
                           const Dataset& dataset, MetricKind kind,
                           const std::string& dataset_id,
                           const std::vector<HeadCoord>& order) {
  AblationReport report;
  report.metric = kind;
  report.dataset_id = dataset_id;
  report.baseline = evaluate(config, params, dataset, kind, AblationSpec{});

  std::vector<HeadCoord> coords = order;
  if (coords.empty()) {
    for (int l = 0; l < config.n_layers; ++l)
      for (int h = 0; h < config.n_heads; ++h) coords.push_back({l, h});
  }
  if (coords.size() != static_cast<std::size_t>(config.n_layers) * config.n_heads) {
    throw DataError("sweep_heads: order must cover every head exactly once");
  }

  std::map<HeadCoord, double> scores;
  for (const HeadCoord& c : coords) {
    if (scores.contains(c)) throw DataError("sweep_heads: duplicate head in order");
    scores[c] = evaluate(config, params, dataset, kind, AblationSpec::single(c.layer, c.head));
  }

  for (int l = 0; l < config.n_layers; ++l) {
    for (int h = 0; h < config.n_heads; ++h) {
      const double s = scores.at({l, h});
      report.entries.push_back({l, h, s, s - report.baseline});
    }
  }
  return report;
}

AblationReport sweep_layers(const ModelConfig& config, const Parameters& params,
                            const Dataset& dataset, MetricKind kind,
                            const std::string& dataset_id) {
  AblationReport report;
  report.metric = kind;
  report.dataset_id = dataset_id;
  report.baseline = evaluate(config, params, dataset, kind, AblationSpec{});
  for (int l = 0; l < config.n_layers; ++l) {
    const double s = evaluate(config, params, dataset, kind,
                              AblationSpec::whole_layer(l, config.n_heads));
    report.entries.push_back({l, -1, s, s - report.baseline});
  }
  return report;
}

RandomHeadBaseline random_head_baseline(const ModelConfig& config, const Parameters& params,
                                        const Dataset& dataset, MetricKind kind,
                                        std::size_t k, std::uint64_t seed) {
  const std::size_t total = static_cast<std::size_t>(config.n_layers) * config.n_heads;
  if (k < 1) throw DataError("random_head_baseline: k must be positive");
  if (k > total) {
    throw DataError("random_head_baseline: k = " + std::to_string(k) + " exceeds the " +
                    std::to_string(total) + " heads in the model");
  }

  std::vector<HeadCoord> all;
  for (int l = 0; l < config.n_layers; ++l)
    for (int h = 0; h < config.n_heads; ++h) all.push_back({l, h});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(all.size() - i);
    std::swap(all[i], all[j]);
  }
  all.resize(k);

  RandomHeadBaseline out;
  out.heads = all;
  const double baseline = evaluate(config, params, dataset, kind, AblationSpec{});
  for (const HeadCoord& c : all) {
    const double s =
        evaluate(config, params, dataset, kind, AblationSpec::single(c.layer, c.head));
    out.deltas.push_back(s - baseline);
  }
  double mean = 0.0;
  for (double d : out.deltas) mean += d;
  mean /= static_cast<double>(out.deltas.size());
  double var = 0.0;
  for (double d : out.deltas) var += (d - mean) * (d - mean);
  var /= static_cast<double>(out.deltas.size());
  out.mean_delta = mean;
  out.stddev_delta = std::sqrt(var);
  return out;
}

std::string report_to_csv(const AblationReport& report) {
  std::string out = "layer,head,score,delta\n";
  for (const AblationEntry& e : report.entries) {
    out += std::to_string(e.layer) + ',' + std::to_string(e.head) + ',' + fmt_double(e.score) +
           ',' + fmt_double(e.delta) + '\n';
  }
  return out;
}

void write_report_csv(const std::string& path, const AblationReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << report_to_csv(report);
  if (!out) throw DataError("write failed: " + path);
}

void write_report_summary_json(const std::string& path, const AblationReport& report) {
  if (report.entries.empty()) throw DataError("report summary: no entries");
  const auto [worst, best] = std::minmax_element(
      report.entries.begin(), report.entries.end(),
      [](const AblationEntry& a, const AblationEntry& b) { return a.delta < b.delta; });
  nlohmann::json j{
      {"baseline", report.baseline},
      {"metric", metric_name(report.metric)},
      {"dataset", report.dataset_id},
      {"best", {{"layer", best->layer}, {"head", best->head}, {"delta", best->delta}}},
      {"worst", {{"layer", worst->layer}, {"head", worst->head}, {"delta", worst->delta}}},
  };
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace atnatlas
