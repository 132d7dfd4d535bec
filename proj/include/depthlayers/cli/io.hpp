#pragma once

#include <filesystem>
#include <string>

#include "depthlayers/core/error.hpp"
#include "depthlayers/core/raster.hpp"

namespace depthlayers::io {

enum class IoErrorCode {
  open_failed,
  malformed_header,
  dimension_overflow,
  unsupported_format,
  unsupported_bit_depth,
  truncated,
  value_out_of_range,
};

const char* to_string(IoErrorCode code);

/// File format failure. Counts as a data error for exit-code purposes.
class IoError : public DataError {
 public:
  IoError(IoErrorCode code, const std::string& what);
  IoErrorCode code() const noexcept { return code_; }

 private:
  IoErrorCode code_;
};

/// Largest width or height accepted by the readers.
inline constexpr long long kMaxImageSide = 1 << 15;

// Depth files: `.pfm` (single channel float) or `.png` (16-bit grayscale holding
// round(v / 10 * 65535)). PFM rows run bottom to top; a negative scale marks
// little-endian samples. Non-finite PFM samples load as invalid pixels and invalid
// pixels save as NaN. PNG depth has no validity channel: invalid pixels save as 0.
DepthMap load_depth(const std::filesystem::path& path);
void save_depth(const DepthMap& d, const std::filesystem::path& path);

DepthMap decode_pfm(const std::string& bytes);
std::string encode_pfm(const DepthMap& d);

/// Loads depth and normalises it to [0, 10] when any valid value lies outside that range.
struct IngestedDepth {
  DepthMap depth;
  bool normalized = false;
  bool degenerate = false;
};
IngestedDepth ingest_depth(const std::filesystem::path& path);

/// 8-bit or 16-bit grayscale PNG; full scale maps to alpha 1. Masks holding only
/// 0 and full scale load as binary, anything else as soft. Saves 8-bit.
Mask load_mask(const std::filesystem::path& path);
void save_mask(const Mask& m, const std::filesystem::path& path);

/// 8-bit or 16-bit single-channel PNG of instance ids. Saves 16-bit.
InstanceMap load_instances(const std::filesystem::path& path);
void save_instances(const InstanceMap& m, const std::filesystem::path& path);

/// 8-bit or 16-bit PNG, colour or grayscale. Saves 8-bit colour.
RgbImage load_rgb(const std::filesystem::path& path);
void save_rgb(const RgbImage& img, const std::filesystem::path& path);

/// Encodes an 8-bit colour raster (row-major RGB triplets) as PNG.
std::string encode_png_rgb8(int width, int height, const std::vector<std::uint8_t>& rgb);

}  // namespace depthlayers::io
