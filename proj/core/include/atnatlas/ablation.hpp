#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atnatlas/encoder.hpp"
#include "atnatlas/tasks.hpp"

namespace atnatlas {

struct AblationEntry {
  int layer = 0;
  int head = 0;  // -1 for layer sweeps
  double score = 0.0;
  double delta = 0.0;  // score - baseline
};

struct AblationReport {
  double baseline = 0.0;
  std::vector<AblationEntry> entries;
  MetricKind metric = MetricKind::Accuracy;
  std::string dataset_id;
};

// Baseline plus one evaluation per single-head ablation:
// n_layers * n_heads + 1 evaluations. `order` optionally fixes the sweep
// order; the report is always assembled in (layer, head) order, so any
// order yields an identical report.
AblationReport sweep_heads(const ModelConfig& config, const Parameters& params,
                           const Dataset& dataset, MetricKind kind,
                           const std::string& dataset_id = "",
                           const std::vector<HeadCoord>& order = {});

// Baseline plus one evaluation per whole-layer ablation: n_layers + 1.
AblationReport sweep_layers(const ModelConfig& config, const Parameters& params,
                            const Dataset& dataset, MetricKind kind,
                            const std::string& dataset_id = "");

struct RandomHeadBaseline {
  double mean_delta = 0.0;
  double stddev_delta = 0.0;
  std::vector<HeadCoord> heads;  // the sampled heads, in sample order
  std::vector<double> deltas;
};

// Mean and standard deviation of the deltas of k random single-head
// ablations, sampled without replacement. Rejects k > n_layers * n_heads.
RandomHeadBaseline random_head_baseline(const ModelConfig& config, const Parameters& params,
                                        const Dataset& dataset, MetricKind kind,
                                        std::size_t k, std::uint64_t seed);

// CSV: layer,head,score,delta (head = -1 for layer sweeps).
std::string report_to_csv(const AblationReport& report);
void write_report_csv(const std::string& path, const AblationReport& report);

// JSON summary: baseline, best/worst deltas with their coordinates.
void write_report_summary_json(const std::string& path, const AblationReport& report);

}  // namespace atnatlas
