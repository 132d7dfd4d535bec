#include "depthlayers/cli/report.hpp"

#include <cstdio>

#include "json.hpp"

#include "depthlayers/core/error.hpp"

namespace depthlayers::io {

using nlohmann::ordered_json;

namespace {

ordered_json metrics_json(const MetricsReport& m) {
  ordered_json j;
  j["rmse"] = m.rmse;
  j["whdr"] = m.whdr;
  j["mbe"] = m.mbe;
  j["r3"] = m.r3 ? ordered_json(*m.r3) : ordered_json(nullptr);
  j["eps_acc"] = m.eps_acc;
  j["eps_comp"] = m.eps_comp;
  j["whdr_pairs"] = m.whdr_pairs;
  j["boundary_pixels"] = m.boundary_pixels;
  j["r3_improved"] = m.r3_improved;
  j["r3_worsened"] = m.r3_worsened;
  j["align_scale"] = m.align_scale;
  j["align_shift"] = m.align_shift;
  j["align_degenerate"] = m.align_degenerate;
  j["whdr_degenerate"] = m.whdr_degenerate;
  j["r3_no_change"] = m.r3_no_change;
  ordered_json inst = ordered_json::array();
  for (const auto& e : m.instances)
    inst.push_back({{"id", e.id}, {"pixels", e.pixels}, {"boundary_pixels", e.boundary_pixels}, {"rmse", e.rmse}});
  j["instances"] = inst;
  return j;
}

MetricsReport metrics_from(const ordered_json& j) {
  MetricsReport m;
  m.rmse = j.at("rmse").get<double>();
  m.whdr = j.at("whdr").get<double>();
  m.mbe = j.at("mbe").get<double>();
  if (!j.at("r3").is_null()) m.r3 = j.at("r3").get<double>();
  m.eps_acc = j.at("eps_acc").get<double>();
  m.eps_comp = j.at("eps_comp").get<double>();
  m.whdr_pairs = j.at("whdr_pairs").get<std::size_t>();
  m.boundary_pixels = j.at("boundary_pixels").get<std::size_t>();
  m.r3_improved = j.at("r3_improved").get<std::size_t>();
  m.r3_worsened = j.at("r3_worsened").get<std::size_t>();
  m.align_scale = j.at("align_scale").get<double>();
  m.align_shift = j.at("align_shift").get<double>();
  m.align_degenerate = j.at("align_degenerate").get<bool>();
  m.whdr_degenerate = j.at("whdr_degenerate").get<bool>();
  m.r3_no_change = j.at("r3_no_change").get<bool>();
  for (const auto& e : j.at("instances"))
    m.instances.push_back({e.at("id").get<std::uint32_t>(), e.at("pixels").get<std::size_t>(),
                           e.at("boundary_pixels").get<std::size_t>(), e.at("rmse").get<double>()});
  return m;
}

MaskDegradation parse_op(const std::string& s) {
  if (s == "opening") return MaskDegradation::opening;
  if (s == "closing") return MaskDegradation::closing;
  throw DataError("unknown degradation '" + s + "'");
}

}  // namespace

std::string report_to_json(const EvaluationReport& r) {
  const MetricOptions& o = r.options;
  ordered_json j;
  j["options"] = {
      {"r3_threshold", o.r3_threshold},
      {"whdr_delta", o.whdr_delta},
      {"whdr_pairs", o.whdr_pairs ? ordered_json(*o.whdr_pairs) : ordered_json(nullptr)},
      {"whdr_seed", o.whdr_seed},
      {"edge_threshold", o.edge_threshold},
      {"edge_truncation", o.edge_truncation},
      {"boundary_erode", o.boundary_erode},
      {"boundary_dilate", o.boundary_dilate},
      {"min_instance_fraction", o.min_instance_fraction},
      {"alignment", "least-squares scale and shift after normalisation to [0, 10]"},
  };
  j["aggregate"] = metrics_json(r.aggregate);
  ordered_json images = ordered_json::array();
  for (const auto& im : r.images) {
    ordered_json e;
    e["name"] = im.name;
    e["metrics"] = metrics_json(im.metrics);
    images.push_back(e);
  }
  j["images"] = images;
  ordered_json sweep = ordered_json::array();
  for (const auto& row : r.sweep)
    sweep.push_back({{"op", to_string(row.op)}, {"kernel", row.kernel}, {"mbe", row.mbe}, {"rmse", row.rmse}});
  j["sweep"] = sweep;
  return j.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    EvaluationReport r;
    const auto& o = j.at("options");
    r.options.r3_threshold = o.at("r3_threshold").get<double>();
    r.options.whdr_delta = o.at("whdr_delta").get<double>();
    r.options.whdr_pairs = o.at("whdr_pairs").is_null() ? std::nullopt
                                                         : std::optional<std::size_t>(o.at("whdr_pairs").get<std::size_t>());
    r.options.whdr_seed = o.at("whdr_seed").get<std::uint64_t>();
    r.options.edge_threshold = o.at("edge_threshold").get<double>();
    r.options.edge_truncation = o.at("edge_truncation").get<double>();
    r.options.boundary_erode = o.at("boundary_erode").get<int>();
    r.options.boundary_dilate = o.at("boundary_dilate").get<int>();
    r.options.min_instance_fraction = o.at("min_instance_fraction").get<double>();
    r.aggregate = metrics_from(j.at("aggregate"));
    for (const auto& e : j.at("images")) r.images.push_back({e.at("name").get<std::string>(), metrics_from(e.at("metrics"))});
    for (const auto& e : j.at("sweep"))
      r.sweep.push_back({parse_op(e.at("op").get<std::string>()), e.at("kernel").get<int>(), e.at("mbe").get<double>(),
                         e.at("rmse").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "op,kernel,mbe,rmse\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%d,%.17g,%.17g\n", to_string(r.op), r.kernel, r.mbe, r.rmse);
    out += line;
  }
  return out;
}

}  // namespace depthlayers::io
