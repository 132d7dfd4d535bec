#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "depthlayers/datagen/morphology.hpp"
#include "depthlayers/datagen/sample.hpp"
#include "depthlayers/metrics/metrics.hpp"
#include "depthlayers/toynet/train.hpp"

namespace depthlayers {

enum class BackendKind { toynet, propagation, identity };
const char* to_string(BackendKind b);
BackendKind parse_backend(const std::string& s);

struct SweepSpec {
  bool enabled = false;
  std::vector<MaskDegradation> ops{MaskDegradation::opening, MaskDegradation::closing};
  std::vector<int> kernels{0, 3, 5, 7, 9};
  bool operator==(const SweepSpec&) const = default;
};

struct RefineOptions {
  BackendKind backend = BackendKind::propagation;
  bool layered = true;      // false runs a single direct pass
  int erode_kernel = 5;     // propagation backend, mask side
  int dilate_kernel = 5;    // propagation backend, inverse side
  int radius = 5;
  int infer_size = 0;       // 0 = native resolution
  bool emit_layers = false;
  bool operator==(const RefineOptions&) const = default;
};

struct RunPaths {
  std::filesystem::path dataset;
  std::filesystem::path checkpoint;
  std::filesystem::path output;
  std::filesystem::path masks;  // optional directory of PNG masks for generate
  bool operator==(const RunPaths&) const = default;
};

/// Everything a subcommand needs, loaded from an INI file with [sections].
/// The key list is in README.md.
struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  RunPaths paths;
  int count = 100;
  GeneratorOptions generator;
  nn::TrainConfig train;
  int stage1_iterations = 2000;
  int stage2_iterations = 2000;
  int checkpoint_every = 0;  // 0 = only at the end
  MetricOptions metrics;
  RefineOptions refine;
  SweepSpec sweep;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Applies "section.key=value" with the same parsing as the INI reader. Does not validate.
void apply_override(RunConfig& c, const std::string& assignment);
/// Full INI text; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& c);

}  // namespace depthlayers
