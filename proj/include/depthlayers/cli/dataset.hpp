#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "depthlayers/datagen/sample.hpp"

namespace depthlayers::io {

// Directory layout of one sample:
//   <root>/samples/<index, six digits>/{rgb.png, depth.pfm, perturbed.pfm, mask.png, layer1.pfm, layer2.pfm, meta.json}
std::filesystem::path sample_dir(const std::filesystem::path& root, std::size_t index);

void write_sample(const std::filesystem::path& root, std::size_t index, const TrainingSample& s, std::uint64_t master_seed);
TrainingSample read_sample(const std::filesystem::path& dir);

/// Sample directories under <root>/samples in index order.
std::vector<std::filesystem::path> list_samples(const std::filesystem::path& root);
/// Reads every sample; all must share one size.
std::vector<TrainingSample> read_dataset(const std::filesystem::path& root, int workers = 1);

/// Every `.png` under `dir` in name order, thresholded at alpha 0.5 into binary masks.
std::vector<Mask> load_mask_pool(const std::filesystem::path& dir);

/// Instance labels implied by a sample mask: 1 on the mask, 0 elsewhere.
InstanceMap mask_instances(const Mask& m);

}  // namespace depthlayers::io
