#include "depthlayers/cli/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <spdlog/spdlog.h>

#include "depthlayers/core/atomic_file.hpp"
#include "depthlayers/core/compose.hpp"

namespace depthlayers::io {

const char* to_string(IoErrorCode code) {
  switch (code) {
    case IoErrorCode::open_failed: return "open_failed";
    case IoErrorCode::malformed_header: return "malformed_header";
    case IoErrorCode::dimension_overflow: return "dimension_overflow";
    case IoErrorCode::unsupported_format: return "unsupported_format";
    case IoErrorCode::unsupported_bit_depth: return "unsupported_bit_depth";
    case IoErrorCode::truncated: return "truncated";
    case IoErrorCode::value_out_of_range: return "value_out_of_range";
  }
  return "unknown";
}

IoError::IoError(IoErrorCode code, const std::string& what)
    : DataError(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

std::string extension(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

std::string slurp(const std::filesystem::path& path) {
  try {
    return read_file(path);
  } catch (const DataError& e) {
    throw IoError(IoErrorCode::open_failed, e.what());
  }
}

// Reads one whitespace-delimited PFM header token; exactly one whitespace byte ends the header.
std::string header_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw IoError(IoErrorCode::malformed_header, "PFM header ends early");
  return bytes.substr(start, pos - start);
}

long long parse_dimension(const std::string& token) {
  if (token.empty() || token.size() > 12 || token.find_first_not_of("0123456789") != std::string::npos)
    throw IoError(IoErrorCode::malformed_header, "PFM dimension '" + token + "' is not a positive integer");
  const long long v = std::stoll(token);
  if (v <= 0) throw IoError(IoErrorCode::malformed_header, "PFM dimension must be positive");
  if (v > kMaxImageSide) throw IoError(IoErrorCode::dimension_overflow, "PFM dimension " + token + " is too large");
  return v;
}

cv::Mat decode_image(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8U, const_cast<char*>(bytes.data()));
  cv::Mat img = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
  if (img.empty()) throw IoError(IoErrorCode::unsupported_format, path.string() + " is not a readable image");
  if (img.cols > kMaxImageSide || img.rows > kMaxImageSide)
    throw IoError(IoErrorCode::dimension_overflow, path.string() + " is too large");
  return img;
}

void write_png(const cv::Mat& img, const std::filesystem::path& path) {
  std::vector<unsigned char> buf;
  if (!cv::imencode(".png", img, buf, {cv::IMWRITE_PNG_COMPRESSION, 6}))
    throw IoError(IoErrorCode::unsupported_format, "PNG encoding failed for " + path.string());
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(buf.data()), buf.size()));
}

void require_png(const std::filesystem::path& path) {
  if (extension(path) != ".png")
    throw IoError(IoErrorCode::unsupported_format, path.string() + ": expected a .png file");
}

// Single-channel plane as doubles scaled so full scale reads 1.0.
Raster<double> unit_plane(const cv::Mat& img, const std::filesystem::path& path) {
  if (img.channels() != 1)
    throw IoError(IoErrorCode::unsupported_format, path.string() + " must have a single channel");
  double full = 0.0;
  if (img.depth() == CV_8U) {
    full = 255.0;
  } else if (img.depth() == CV_16U) {
    full = 65535.0;
  } else {
    throw IoError(IoErrorCode::unsupported_bit_depth, path.string() + " must be 8-bit or 16-bit");
  }
  Raster<double> out(img.cols, img.rows);
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x)
      out(x, y) = (img.depth() == CV_8U ? img.at<std::uint8_t>(y, x) : img.at<std::uint16_t>(y, x)) / full;
  return out;
}

}  // namespace

DepthMap decode_pfm(const std::string& bytes) {
  std::size_t pos = 0;
  const std::string magic = header_token(bytes, pos);
  if (magic == "PF") throw IoError(IoErrorCode::unsupported_format, "colour PFM is not a depth map");
  if (magic != "Pf") throw IoError(IoErrorCode::malformed_header, "PFM magic must be 'Pf'");
  const long long w = parse_dimension(header_token(bytes, pos));
  const long long h = parse_dimension(header_token(bytes, pos));
  const std::string scale_text = header_token(bytes, pos);
  char* end = nullptr;
  const double scale = std::strtod(scale_text.c_str(), &end);
  if (*end != '\0' || !std::isfinite(scale) || scale == 0.0)
    throw IoError(IoErrorCode::malformed_header, "PFM scale '" + scale_text + "' is invalid");
  if (pos >= bytes.size()) throw IoError(IoErrorCode::truncated, "PFM has no pixel data");
  ++pos;

  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < n * 4) throw IoError(IoErrorCode::truncated, "PFM pixel data is short");
  if (bytes.size() - pos > n * 4) throw IoError(IoErrorCode::malformed_header, "PFM has trailing bytes");
  const bool little = scale < 0.0;

  DepthMap d(static_cast<int>(w), static_cast<int>(h));
  Raster<std::uint8_t> valid(d.width(), d.height(), 1);
  bool any_invalid = false;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (int row = 0; row < d.height(); ++row) {
    const int y = d.height() - 1 - row;
    for (int x = 0; x < d.width(); ++x, p += 4) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(p[little ? b : 3 - b]) << (8 * b);
      const float f = std::bit_cast<float>(u);
      if (std::isfinite(f)) {
        d(x, y) = static_cast<double>(f);
      } else {
        valid(x, y) = 0;
        any_invalid = true;
      }
    }
  }
  if (any_invalid) d.set_validity(std::move(valid));
  return d;
}

std::string encode_pfm(const DepthMap& d) {
  std::ostringstream head;
  head << "Pf\n" << d.width() << ' ' << d.height() << "\n-1.0\n";
  std::string out = head.str();
  out.reserve(out.size() + d.count() * 4);
  for (int row = 0; row < d.height(); ++row) {
    const int y = d.height() - 1 - row;
    for (int x = 0; x < d.width(); ++x) {
      const float f = d.is_valid(d.values().index(x, y)) ? static_cast<float>(d(x, y)) : std::nanf("");
      const auto u = std::bit_cast<std::uint32_t>(f);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
    }
  }
  return out;
}

DepthMap load_depth(const std::filesystem::path& path) {
  const std::string ext = extension(path);
  if (ext == ".pfm") return decode_pfm(slurp(path));
  if (ext != ".png") throw IoError(IoErrorCode::unsupported_format, path.string() + ": depth must be .pfm or .png");
  const cv::Mat img = decode_image(path);
  if (img.channels() != 1) throw IoError(IoErrorCode::unsupported_format, path.string() + " must be grayscale");
  if (img.depth() != CV_16U)
    throw IoError(IoErrorCode::unsupported_bit_depth, path.string() + ": depth PNG must be 16-bit");
  DepthMap d(img.cols, img.rows);
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x) d(x, y) = img.at<std::uint16_t>(y, x) * (kDepthRangeMax / 65535.0);
  return d;
}

void save_depth(const DepthMap& d, const std::filesystem::path& path) {
  const std::string ext = extension(path);
  if (ext == ".pfm") {
    write_file_atomic(path, encode_pfm(d));
    return;
  }
  if (ext != ".png") throw IoError(IoErrorCode::unsupported_format, path.string() + ": depth must be .pfm or .png");
  cv::Mat img(d.height(), d.width(), CV_16U);
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x) {
      const double v = d.is_valid(d.values().index(x, y)) ? d(x, y) : 0.0;
      if (!(v >= 0.0 && v <= kDepthRangeMax))
        throw IoError(IoErrorCode::value_out_of_range, "depth PNG values must lie in [0, 10]");
      img.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(std::lround(v / kDepthRangeMax * 65535.0));
    }
  write_png(img, path);
}

IngestedDepth ingest_depth(const std::filesystem::path& path) {
  IngestedDepth out{load_depth(path)};
  bool inside = true;
  for (std::size_t i = 0; i < out.depth.count(); ++i)
    if (out.depth.is_valid(i) && !(out.depth[i] >= 0.0 && out.depth[i] <= kDepthRangeMax)) inside = false;
  if (!inside) {
    auto n = normalize_depth(out.depth);
    out.depth = std::move(n.depth);
    out.normalized = true;
    out.degenerate = n.degenerate;
    spdlog::info("{}: values outside [0, 10], normalised on load", path.string());
  }
  return out;
}

Mask load_mask(const std::filesystem::path& path) {
  require_png(path);
  Raster<double> alpha = unit_plane(decode_image(path), path);
  bool binary = true;
  for (double a : alpha.vector()) binary = binary && (a == 0.0 || a == 1.0);
  return Mask(std::move(alpha), binary ? MaskKind::binary : MaskKind::soft);
}

void save_mask(const Mask& m, const std::filesystem::path& path) {
  require_png(path);
  cv::Mat img(m.height(), m.width(), CV_8U);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) img.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::lround(m(x, y) * 255.0));
  write_png(img, path);
}

InstanceMap load_instances(const std::filesystem::path& path) {
  require_png(path);
  const cv::Mat img = decode_image(path);
  if (img.channels() != 1) throw IoError(IoErrorCode::unsupported_format, path.string() + " must be single channel");
  if (img.depth() != CV_8U && img.depth() != CV_16U)
    throw IoError(IoErrorCode::unsupported_bit_depth, path.string() + ": instance PNG must be 8-bit or 16-bit");
  InstanceMap out(img.cols, img.rows);
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x)
      out(x, y) = img.depth() == CV_8U ? img.at<std::uint8_t>(y, x) : img.at<std::uint16_t>(y, x);
  return out;
}

void save_instances(const InstanceMap& m, const std::filesystem::path& path) {
  require_png(path);
  cv::Mat img(m.height(), m.width(), CV_16U);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (m(x, y) > 65535) throw IoError(IoErrorCode::value_out_of_range, "instance ids above 65535 do not fit");
      img.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(m(x, y));
    }
  write_png(img, path);
}

RgbImage load_rgb(const std::filesystem::path& path) {
  require_png(path);
  const cv::Mat img = decode_image(path);
  double full = 0.0;
  if (img.depth() == CV_8U) {
    full = 255.0;
  } else if (img.depth() == CV_16U) {
    full = 65535.0;
  } else {
    throw IoError(IoErrorCode::unsupported_bit_depth, path.string() + ": RGB PNG must be 8-bit or 16-bit");
  }
  const int ch = img.channels();
  if (ch != 1 && ch != 3 && ch != 4)
    throw IoError(IoErrorCode::unsupported_format, path.string() + ": unsupported channel count");
  RgbImage out(img.cols, img.rows);
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x)
      for (int c = 0; c < 3; ++c) {
        // OpenCV stores colour as BGR(A).
        const int src = ch == 1 ? 0 : 2 - c;
        const double v = img.depth() == CV_8U ? img.ptr<std::uint8_t>(y)[x * ch + src]
                                              : img.ptr<std::uint16_t>(y)[x * ch + src];
        out(c, x, y) = v / full;
      }
  return out;
}

void save_rgb(const RgbImage& img, const std::filesystem::path& path) {
  require_png(path);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(img.width()) * img.height() * 3);
  std::size_t k = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c)
        rgb[k++] = static_cast<std::uint8_t>(std::lround(std::clamp(img(c, x, y), 0.0, 1.0) * 255.0));
  write_file_atomic(path, encode_png_rgb8(img.width(), img.height(), rgb));
}

std::string encode_png_rgb8(int width, int height, const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3)
    throw InvalidArgument("RGB buffer does not match the image size");
  cv::Mat img(height, width, CV_8UC3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
      img.at<cv::Vec3b>(y, x) = cv::Vec3b(rgb[k + 2], rgb[k + 1], rgb[k]);
    }
  std::vector<unsigned char> buf;
  if (!cv::imencode(".png", img, buf, {cv::IMWRITE_PNG_COMPRESSION, 6}))
    throw IoError(IoErrorCode::unsupported_format, "PNG encoding failed");
  return std::string(reinterpret_cast<const char*>(buf.data()), buf.size());
}

}  // namespace depthlayers::io
