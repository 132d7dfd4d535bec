#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "depthlayers/datagen/morphology.hpp"
#include "depthlayers/metrics/metrics.hpp"

namespace depthlayers::io {

struct ImageReport {
  std::string name;
  MetricsReport metrics;
  bool operator==(const ImageReport&) const = default;
};

/// One row of the mask-degradation table.
struct SweepRow {
  MaskDegradation op = MaskDegradation::opening;
  int kernel = 0;
  double mbe = 0.0;
  double rmse = 0.0;
  bool operator==(const SweepRow&) const = default;
};

struct EvaluationReport {
  MetricOptions options;
  std::vector<ImageReport> images;
  MetricsReport aggregate;
  std::vector<SweepRow> sweep;
  bool operator==(const EvaluationReport&) const = default;
};

/// Keys appear in a fixed order; doubles use shortest round-trip formatting.
std::string report_to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const std::string& text);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace depthlayers::io
