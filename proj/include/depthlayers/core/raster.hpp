#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depthlayers/core/error.hpp"

namespace depthlayers {

struct Size {
  int width = 0;
  int height = 0;

  std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool operator==(const Size&) const = default;
};

std::string to_string(Size s);

/// Dense row-major single-plane image.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{}) : size_(check(width, height)), data_(size_.area(), fill) {}
  Raster(int width, int height, std::vector<T> data) : size_(check(width, height)), data_(std::move(data)) {
    if (data_.size() != size_.area()) throw DimensionMismatch("raster data does not match " + to_string(size_));
  }

  int width() const { return size_.width; }
  int height() const { return size_.height; }
  Size size() const { return size_; }
  std::size_t count() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < size_.width && y < size_.height; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) + static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Replicate-border access.
  const T& clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= size_.width ? size_.width - 1 : x);
    y = y < 0 ? 0 : (y >= size_.height ? size_.height - 1 : y);
    return (*this)(x, y);
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& vector() { return data_; }
  const std::vector<T>& vector() const { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  static Size check(int w, int h) {
    if (w < 0 || h < 0) throw InvalidArgument("negative raster dimensions");
    return Size{w, h};
  }

  Size size_{};
  std::vector<T> data_;
};

void require_same_size(Size a, Size b, const char* what);

/// Inverse-depth map with an optional validity raster (absent = all valid).
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0) : values_(width, height, fill) {}
  explicit DepthMap(Raster<double> values) : values_(std::move(values)) {}
  DepthMap(int width, int height, std::vector<double> values) : values_(width, height, std::move(values)) {}

  int width() const { return values_.width(); }
  int height() const { return values_.height(); }
  Size size() const { return values_.size(); }
  std::size_t count() const { return values_.count(); }

  double& operator()(int x, int y) { return values_(x, y); }
  double operator()(int x, int y) const { return values_(x, y); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  Raster<double>& values() { return values_; }
  const Raster<double>& values() const { return values_; }

  bool has_validity() const { return valid_.has_value(); }
  bool is_valid(std::size_t i) const { return !valid_ || (*valid_)[i] != 0; }
  const std::optional<Raster<std::uint8_t>>& validity() const { return valid_; }
  void set_validity(Raster<std::uint8_t> valid);
  void clear_validity() { valid_.reset(); }
  bool fully_valid() const;
  std::size_t valid_count() const;

  bool operator==(const DepthMap&) const = default;

 private:
  Raster<double> values_;
  std::optional<Raster<std::uint8_t>> valid_;
};

/// Three-plane colour image, channel values in [0,1].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, double fill = 0.0);

  int width() const { return size_.width; }
  int height() const { return size_.height; }
  Size size() const { return size_; }

  double& operator()(int c, int x, int y) { return data_[plane_offset(c) + index(x, y)]; }
  double operator()(int c, int x, int y) const { return data_[plane_offset(c) + index(x, y)]; }

  std::span<double> plane(int c) { return std::span<double>(data_).subspan(plane_offset(c), size_.area()); }
  std::span<const double> plane(int c) const {
    return std::span<const double>(data_).subspan(plane_offset(c), size_.area());
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) + static_cast<std::size_t>(x);
  }
  std::size_t plane_offset(int c) const { return static_cast<std::size_t>(c) * size_.area(); }

  Size size_{};
  std::vector<double> data_;
};

enum class MaskKind { binary, soft };

/// Alpha matte in [0,1]. Binary masks hold exactly 0 or 1.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, double fill = 0.0);
  Mask(Raster<double> alpha, MaskKind kind);

  static Mask from_predicate(Size size, const std::vector<std::uint8_t>& on);

  int width() const { return alpha_.width(); }
  int height() const { return alpha_.height(); }
  Size size() const { return alpha_.size(); }
  std::size_t count() const { return alpha_.count(); }
  MaskKind kind() const { return kind_; }
  bool is_binary() const { return kind_ == MaskKind::binary; }

  double operator()(int x, int y) const { return alpha_(x, y); }
  double operator[](std::size_t i) const { return alpha_[i]; }
  bool on(std::size_t i) const { return alpha_[i] >= 0.5; }
  bool on(int x, int y) const { return alpha_(x, y) >= 0.5; }

  const Raster<double>& alpha() const { return alpha_; }
  Mask inverse() const;
  std::size_t on_count() const;
  double coverage() const;

  bool operator==(const Mask&) const = default;

 private:
  Raster<double> alpha_;
  MaskKind kind_ = MaskKind::binary;
};

/// Instance segmentation labels; id 0 is unlabeled.
using InstanceMap = Raster<std::uint32_t>;

}  // namespace depthlayers
