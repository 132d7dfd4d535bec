#include "depthlayers/cli/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "json.hpp"

#include "depthlayers/cli/io.hpp"
#include "depthlayers/core/atomic_file.hpp"
#include "depthlayers/core/parallel.hpp"

namespace depthlayers::io {

using nlohmann::ordered_json;

std::filesystem::path sample_dir(const std::filesystem::path& root, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "%06zu", index);
  return root / "samples" / name;
}

void write_sample(const std::filesystem::path& root, std::size_t index, const TrainingSample& s, std::uint64_t master_seed) {
  const auto dir = sample_dir(root, index);
  std::filesystem::create_directories(dir);
  save_rgb(s.rgb, dir / "rgb.png");
  save_depth(s.depth, dir / "depth.pfm");
  save_depth(s.perturbed, dir / "perturbed.pfm");
  save_mask(s.mask, dir / "mask.png");
  save_depth(s.layer1, dir / "layer1.pfm");
  save_depth(s.layer2, dir / "layer2.pfm");

  const PerturbConfig& p = s.perturb;
  ordered_json meta;
  meta["index"] = index;
  meta["master_seed"] = master_seed;
  meta["seed"] = s.seed;
  meta["category"] = to_string(s.category);
  meta["width"] = s.depth.width();
  meta["height"] = s.depth.height();
  meta["perturb"] = {
      {"morph_iters", {p.morph_iters.lo, p.morph_iters.hi}},
      {"morph_kernel", p.morph_kernel},
      {"blur_small_sigma", {p.blur_small_sigma.lo, p.blur_small_sigma.hi}},
      {"blur_large_sigma", {p.blur_large_sigma.lo, p.blur_large_sigma.hi}},
      {"blur_small_prob", p.blur_small_prob},
      {"order_scheme_prob", p.order_scheme_prob},
      {"hole_ring_width", p.hole_ring_width},
      {"hole_perturb_prob", p.hole_perturb_prob},
  };
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

TrainingSample read_sample(const std::filesystem::path& dir) {
  TrainingSample s;
  s.rgb = load_rgb(dir / "rgb.png");
  s.depth = load_depth(dir / "depth.pfm");
  s.perturbed = load_depth(dir / "perturbed.pfm");
  s.mask = load_mask(dir / "mask.png");
  s.layer1 = load_depth(dir / "layer1.pfm");
  s.layer2 = load_depth(dir / "layer2.pfm");
  const Size size = s.depth.size();
  for (Size other : {s.rgb.size(), s.perturbed.size(), s.mask.size(), s.layer1.size(), s.layer2.size()})
    if (!(other == size)) throw DataError(dir.string() + ": sample rasters differ in size");
  try {
    const auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
    s.seed = meta.at("seed").get<std::uint64_t>();
    s.category = parse_mask_category(meta.at("category").get<std::string>());
    const auto& p = meta.at("perturb");
    s.perturb.morph_iters = {p.at("morph_iters")[0].get<int>(), p.at("morph_iters")[1].get<int>()};
    s.perturb.morph_kernel = p.at("morph_kernel").get<int>();
    s.perturb.blur_small_sigma = {p.at("blur_small_sigma")[0].get<double>(), p.at("blur_small_sigma")[1].get<double>()};
    s.perturb.blur_large_sigma = {p.at("blur_large_sigma")[0].get<double>(), p.at("blur_large_sigma")[1].get<double>()};
    s.perturb.blur_small_prob = p.at("blur_small_prob").get<double>();
    s.perturb.order_scheme_prob = p.at("order_scheme_prob").get<double>();
    s.perturb.hole_ring_width = p.at("hole_ring_width").get<int>();
    s.perturb.hole_perturb_prob = p.at("hole_perturb_prob").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + "/meta.json: " + e.what());
  }
  return s;
}

std::vector<std::filesystem::path> list_samples(const std::filesystem::path& root) {
  const auto base = root / "samples";
  if (!std::filesystem::is_directory(base)) throw DataError(root.string() + " has no samples/ directory");
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(base))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw DataError(root.string() + " holds no samples");
  return dirs;
}

std::vector<TrainingSample> read_dataset(const std::filesystem::path& root, int workers) {
  const auto dirs = list_samples(root);
  std::vector<TrainingSample> out(dirs.size());
  parallel_for(dirs.size(), workers, [&](std::size_t i) { out[i] = read_sample(dirs[i]); });
  for (const auto& s : out)
    if (!(s.depth.size() == out.front().depth.size()))
      throw DataError(root.string() + ": samples differ in size");
  return out;
}

InstanceMap mask_instances(const Mask& m) {
  InstanceMap inst(m.width(), m.height(), 0u);
  for (std::size_t i = 0; i < m.count(); ++i) inst[i] = m.on(i) ? 1u : 0u;
  return inst;
}

std::vector<Mask> load_mask_pool(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("mask directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .png masks in " + dir.string());
  std::vector<Mask> pool;
  for (const auto& f : files) {
    const Mask m = load_mask(f);
    std::vector<std::uint8_t> on(m.count());
    for (std::size_t i = 0; i < m.count(); ++i) on[i] = m.alpha()[i] >= 0.5;
    pool.push_back(Mask::from_predicate(m.size(), on));
  }
  return pool;
}

}  // namespace depthlayers::io
