#include "depthlayers/core/raster.hpp"

#include <algorithm>
#include <cmath>

namespace depthlayers {

std::string to_string(Size s) { return std::to_string(s.width) + "x" + std::to_string(s.height); }

void require_same_size(Size a, Size b, const char* what) {
  if (a != b) throw DimensionMismatch(std::string(what) + ": size " + to_string(a) + " vs " + to_string(b));
}

void DepthMap::set_validity(Raster<std::uint8_t> valid) {
  require_same_size(size(), valid.size(), "depth validity");
  valid_ = std::move(valid);
}

bool DepthMap::fully_valid() const {
  if (!valid_) return true;
  return std::all_of(valid_->data().begin(), valid_->data().end(), [](std::uint8_t v) { return v != 0; });
}

std::size_t DepthMap::valid_count() const {
  if (!valid_) return count();
  return static_cast<std::size_t>(
      std::count_if(valid_->data().begin(), valid_->data().end(), [](std::uint8_t v) { return v != 0; }));
}

RgbImage::RgbImage(int width, int height, double fill) {
  if (width < 0 || height < 0) throw InvalidArgument("negative image dimensions");
  size_ = Size{width, height};
  data_.assign(3 * size_.area(), fill);
}

namespace {

bool all_binary(const Raster<double>& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return v == 0.0 || v == 1.0; });
}

}  // namespace

Mask::Mask(int width, int height, double fill) : alpha_(width, height, fill) {
  if (!(fill >= 0.0 && fill <= 1.0)) throw InvalidArgument("mask alpha outside [0,1]");
  kind_ = (fill == 0.0 || fill == 1.0) ? MaskKind::binary : MaskKind::soft;
}

Mask::Mask(Raster<double> alpha, MaskKind kind) : alpha_(std::move(alpha)), kind_(kind) {
  for (double v : alpha_.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("mask alpha outside [0,1]");
  }
  if (kind_ == MaskKind::binary && !all_binary(alpha_)) throw InvalidArgument("binary mask holds non-binary alpha");
}

Mask Mask::from_predicate(Size size, const std::vector<std::uint8_t>& on) {
  if (on.size() != size.area()) throw DimensionMismatch("mask predicate size");
  Raster<double> alpha(size.width, size.height);
  for (std::size_t i = 0; i < on.size(); ++i) alpha[i] = on[i] ? 1.0 : 0.0;
  return Mask(std::move(alpha), MaskKind::binary);
}

Mask Mask::inverse() const {
  Raster<double> alpha = alpha_;
  for (double& v : alpha.data()) v = 1.0 - v;
  return Mask(std::move(alpha), kind_);
}

std::size_t Mask::on_count() const {
  return static_cast<std::size_t>(
      std::count_if(alpha_.data().begin(), alpha_.data().end(), [](double v) { return v >= 0.5; }));
}

double Mask::coverage() const {
  if (alpha_.empty()) return 0.0;
  double sum = 0.0;
  for (double v : alpha_.data()) sum += v;
  return sum / static_cast<double>(alpha_.count());
}

}  // namespace depthlayers
