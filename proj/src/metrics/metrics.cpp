#include "depthlayers/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "depthlayers/core/compose.hpp"
#include "depthlayers/datagen/crop.hpp"
#include "depthlayers/datagen/morphology.hpp"

namespace depthlayers {

namespace {

bool both_valid(const DepthMap& a, const DepthMap& b, std::size_t i) { return a.is_valid(i) && b.is_valid(i); }

}  // namespace

double rmse(const DepthMap& pred, const DepthMap& gt) {
  require_same_size(pred.size(), gt.size(), "rmse");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (!both_valid(pred, gt, i)) continue;
    const double e = pred[i] - gt[i];
    sum += e * e;
    ++n;
  }
  if (n == 0) throw DataError("rmse: no valid overlap");
  return std::sqrt(sum / static_cast<double>(n));
}

int ordinal_label(double a, double b, double delta) {
  if (a > (1.0 + delta) * b) return 1;
  if (a * (1.0 + delta) < b) return -1;
  return 0;
}

WhdrResult whdr(const DepthMap& pred, const DepthMap& gt, std::optional<std::size_t> pairs, double delta, Rng& rng) {
  require_same_size(pred.size(), gt.size(), "whdr");
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < pred.count(); ++i)
    if (both_valid(pred, gt, i)) valid.push_back(i);
  if (valid.size() < 2) throw DataError("whdr: fewer than two valid pixels");

  WhdrResult r;
  const auto [lo, hi] = std::minmax_element(valid.begin(), valid.end(), [&](auto a, auto b) { return gt[a] < gt[b]; });
  if (gt[*lo] == gt[*hi]) {
    r.degenerate = true;
    return r;
  }

  std::size_t disagree = 0;
  auto visit = [&](std::size_t a, std::size_t b) {
    if (ordinal_label(pred[a], pred[b], delta) != ordinal_label(gt[a], gt[b], delta)) ++disagree;
    ++r.pairs;
  };
  if (!pairs) {
    for (std::size_t i = 0; i < valid.size(); ++i)
      for (std::size_t j = i + 1; j < valid.size(); ++j) visit(valid[i], valid[j]);
  } else {
    const auto n = static_cast<std::int64_t>(valid.size());
    for (std::size_t k = 0; k < *pairs; ++k) {
      const auto i = rng.uniform_int(0, n - 1);
      auto j = rng.uniform_int(0, n - 2);
      if (j >= i) ++j;
      visit(valid[static_cast<std::size_t>(i)], valid[static_cast<std::size_t>(j)]);
    }
  }
  r.value = r.pairs ? static_cast<double>(disagree) / static_cast<double>(r.pairs) : 0.0;
  return r;
}

Mask mask_boundary(const Mask& m, int erode_kernel, int dilate_kernel) {
  if (!m.is_binary()) throw InvalidArgument("mask_boundary requires a binary mask");
  if (m.on_count() == 0) throw DataError("mask_boundary: empty instance");
  const Mask eroded = erode(m, erode_kernel, Border::zero);
  std::vector<std::uint8_t> edge(m.count());
  for (std::size_t i = 0; i < m.count(); ++i) edge[i] = m.on(i) && !eroded.on(i);
  return dilate(Mask::from_predicate(m.size(), edge), dilate_kernel, Border::zero);
}

MbeResult mbe(const DepthMap& pred, const DepthMap& gt, const InstanceMap& inst, const MetricOptions& opts) {
  require_same_size(pred.size(), gt.size(), "mbe");
  require_same_size(pred.size(), inst.size(), "mbe instances");
  MbeResult r;
  for (std::uint32_t id : qualifying_instances(inst, opts.min_instance_fraction)) {
    std::vector<std::uint8_t> on(inst.count());
    std::size_t pixels = 0;
    for (std::size_t i = 0; i < inst.count(); ++i) {
      on[i] = inst[i] == id;
      pixels += on[i];
    }
    const Mask band = mask_boundary(Mask::from_predicate(inst.size(), on), opts.boundary_erode, opts.boundary_dilate);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < band.count(); ++i) {
      if (!band.on(i) || !both_valid(pred, gt, i)) continue;
      const double e = gt[i] - pred[i];
      sum += e * e;
      ++n;
    }
    if (n == 0) continue;
    r.instances.push_back({id, pixels, n, std::sqrt(sum / static_cast<double>(n))});
  }
  if (r.instances.empty()) throw DataError("mbe: no qualifying instances");
  double total = 0.0;
  for (const auto& e : r.instances) total += e.rmse;
  r.value = total / static_cast<double>(r.instances.size());
  return r;
}

Raster<double> improvement_map(const DepthMap& initial, const DepthMap& refined, const DepthMap& gt) {
  require_same_size(initial.size(), gt.size(), "improvement_map");
  require_same_size(refined.size(), gt.size(), "improvement_map");
  Raster<double> out(gt.width(), gt.height(), 0.0);
  for (std::size_t i = 0; i < out.count(); ++i) {
    if (!gt.is_valid(i) || !initial.is_valid(i) || !refined.is_valid(i)) continue;
    out[i] = std::abs(initial[i] - gt[i]) - std::abs(refined[i] - gt[i]);
  }
  return out;
}

R3Result r3(const DepthMap& refined, const DepthMap& initial, const DepthMap& gt, double threshold) {
  const Raster<double> map = improvement_map(initial, refined, gt);
  R3Result r;
  for (std::size_t i = 0; i < map.count(); ++i) {
    if (!gt.is_valid(i) || !initial.is_valid(i) || !refined.is_valid(i)) continue;
    if (map[i] > threshold) ++r.improved;
    else if (-map[i] > threshold) ++r.worsened;
  }
  if (r.improved == 0 && r.worsened == 0) {
    r.value = 1.0;
    r.no_change = true;
  } else {
    r.value = static_cast<double>(r.improved) / static_cast<double>(std::max<std::size_t>(r.worsened, 1));
  }
  return r;
}

Raster<std::uint8_t> depth_edges(const DepthMap& d, double threshold) {
  Raster<std::uint8_t> edges(d.width(), d.height(), 0);
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      const std::size_t i = d.values().index(x, y);
      if (!d.is_valid(i)) continue;
      double gx = 0.0, gy = 0.0;
      if (x + 1 < d.width() && d.is_valid(i + 1)) gx = d(x + 1, y) - d(x, y);
      if (y + 1 < d.height() && d.is_valid(i + static_cast<std::size_t>(d.width()))) gy = d(x, y + 1) - d(x, y);
      edges[i] = std::sqrt(gx * gx + gy * gy) > threshold ? 1 : 0;
    }
  }
  return edges;
}

namespace {

// Lower envelope of parabolas; squared distances along one line.
void edt_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[static_cast<std::size_t>(q)] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[static_cast<std::size_t>(q)] + q * q) - (f[static_cast<std::size_t>(p)] + p * p)) / (2.0 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= z[static_cast<std::size_t>(k)]) {
      // k == 0 and the new parabola dominates everywhere.
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = inf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(q)] = static_cast<double>((q - p) * (q - p)) + f[static_cast<std::size_t>(p)];
  }
}

}  // namespace

Raster<double> distance_transform(const Raster<std::uint8_t>& features) {
  const int w = features.width();
  const int h = features.height();
  constexpr double inf = std::numeric_limits<double>::infinity();
  Raster<double> sq(w, h, inf);
  const int n = std::max(w, h);
  std::vector<double> f, out;
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);

  f.resize(static_cast<std::size_t>(h));
  out.resize(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = features(x, y) ? 0.0 : inf;
    edt_1d(f, out, v, z);
    for (int y = 0; y < h; ++y) sq(x, y) = out[static_cast<std::size_t>(y)];
  }
  f.resize(static_cast<std::size_t>(w));
  out.resize(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[static_cast<std::size_t>(x)] = sq(x, y);
    edt_1d(f, out, v, z);
    for (int x = 0; x < w; ++x) sq(x, y) = std::sqrt(out[static_cast<std::size_t>(x)]);
  }
  return sq;
}

BoundaryError boundary_error(const DepthMap& pred, const DepthMap& gt, double edge_threshold, double truncation) {
  require_same_size(pred.size(), gt.size(), "boundary_error");
  const auto pe = depth_edges(pred, edge_threshold);
  const auto ge = depth_edges(gt, edge_threshold);
  const auto dist_to_gt = distance_transform(ge);
  const auto dist_to_pred = distance_transform(pe);

  BoundaryError r;
  double acc = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < pe.count(); ++i) {
    if (pe[i]) {
      acc += std::min(dist_to_gt[i], truncation);
      ++r.pred_edges;
    }
    if (ge[i]) {
      comp += std::min(dist_to_pred[i], truncation);
      ++r.gt_edges;
    }
  }
  r.accuracy = r.pred_edges ? acc / static_cast<double>(r.pred_edges) : 0.0;
  r.completeness = r.gt_edges ? comp / static_cast<double>(r.gt_edges) : 0.0;
  return r;
}

MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt, const InstanceMap& inst, const DepthMap* initial,
                       const MetricOptions& opts) {
  const AlignmentResult aligned = align_scale_shift(pred, gt);
  const DepthMap& p = aligned.aligned;

  MetricsReport rep;
  rep.align_scale = aligned.scale;
  rep.align_shift = aligned.shift;
  rep.align_degenerate = aligned.degenerate;
  rep.rmse = rmse(p, gt);

  Rng rng(opts.whdr_seed);
  const WhdrResult w = whdr(p, gt, opts.whdr_pairs, opts.whdr_delta, rng);
  rep.whdr = w.value;
  rep.whdr_pairs = w.pairs;
  rep.whdr_degenerate = w.degenerate;

  const MbeResult m = mbe(p, gt, inst, opts);
  rep.mbe = m.value;
  rep.instances = m.instances;
  for (const auto& e : m.instances) rep.boundary_pixels += e.boundary_pixels;

  const BoundaryError be = boundary_error(p, gt, opts.edge_threshold, opts.edge_truncation);
  rep.eps_acc = be.accuracy;
  rep.eps_comp = be.completeness;

  if (initial) {
    const AlignmentResult init_aligned = align_scale_shift(*initial, gt);
    const R3Result r = r3(p, init_aligned.aligned, gt, opts.r3_threshold);
    rep.r3 = r.value;
    rep.r3_improved = r.improved;
    rep.r3_worsened = r.worsened;
    rep.r3_no_change = r.no_change;
  }
  return rep;
}

namespace {

double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

template <class F>
double batch_mean(const std::vector<MetricsReport>& reports, F field) {
  std::vector<double> v;
  v.reserve(reports.size());
  for (const auto& r : reports) v.push_back(field(r));
  return pairwise_sum(v, 0, v.size()) / static_cast<double>(v.size());
}

}  // namespace

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
  MetricsReport agg;
  if (reports.empty()) return agg;
  agg.rmse = batch_mean(reports, [](const auto& r) { return r.rmse; });
  agg.whdr = batch_mean(reports, [](const auto& r) { return r.whdr; });
  agg.mbe = batch_mean(reports, [](const auto& r) { return r.mbe; });
  agg.eps_acc = batch_mean(reports, [](const auto& r) { return r.eps_acc; });
  agg.eps_comp = batch_mean(reports, [](const auto& r) { return r.eps_comp; });
  agg.align_scale = batch_mean(reports, [](const auto& r) { return r.align_scale; });
  agg.align_shift = batch_mean(reports, [](const auto& r) { return r.align_shift; });
  bool any_r3 = false;
  for (const auto& r : reports) {
    agg.whdr_pairs += r.whdr_pairs;
    agg.boundary_pixels += r.boundary_pixels;
    agg.r3_improved += r.r3_improved;
    agg.r3_worsened += r.r3_worsened;
    agg.align_degenerate = agg.align_degenerate || r.align_degenerate;
    agg.whdr_degenerate = agg.whdr_degenerate || r.whdr_degenerate;
    any_r3 = any_r3 || r.r3.has_value();
  }
  if (any_r3) {
    // R3 over a batch pools the pixel counts rather than averaging per-image ratios.
    agg.r3_no_change = agg.r3_improved == 0 && agg.r3_worsened == 0;
    agg.r3 = agg.r3_no_change ? 1.0
                              : static_cast<double>(agg.r3_improved) /
                                    static_cast<double>(std::max<std::size_t>(agg.r3_worsened, 1));
  }
  return agg;
}

}  // namespace depthlayers
