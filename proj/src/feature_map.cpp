#include "wavefuse/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace wavefuse {

std::string to_string(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

FeatureMap::FeatureMap(Shape shape) : shape_(shape), data_(shape.size(), 0.0f) {}

FeatureMap::FeatureMap(Shape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw Error("feature map data length " + std::to_string(data_.size()) +
                " does not match shape " + to_string(shape_));
  }
  require_finite(*this, "feature map");
}

FeatureMap FeatureMap::filled(Shape shape, float value) {
  FeatureMap m(shape);
  std::fill(m.data_.begin(), m.data_.end(), value);
  return m;
}

bool FeatureMap::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

bool FeatureMap::operator==(const FeatureMap& other) const {
  return shape_ == other.shape_ &&
         (data_.empty() ||
          std::memcmp(data_.data(), other.data_.data(),
                      data_.size() * sizeof(float)) == 0);
}

void require_finite(const FeatureMap& x, const char* what) {
  if (!x.all_finite()) {
    throw Error(std::string(what) + " contains non-finite values");
  }
}

void require_same_shape(const FeatureMap& a, const FeatureMap& b,
                        const char* what) {
  if (a.shape() != b.shape()) {
    throw Error(std::string(what) + ": shape mismatch " + to_string(a.shape()) +
                " vs " + to_string(b.shape()));
  }
}

double sum_of_squares(const FeatureMap& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += static_cast<double>(v) * v;
  return acc;
}

double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
  }
  return m;
}

double inner_product(const FeatureMap& a, const FeatureMap& b) {
  require_same_shape(a, b, "inner_product");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a.data()[i]) * b.data()[i];
  }
  return acc;
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) {
  require_same_shape(a, b, "add");
  FeatureMap out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.data()[i] = a.data()[i] + b.data()[i];
  }
  return out;
}

FeatureMap scale(const FeatureMap& a, float factor) {
  FeatureMap out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * factor;
  return out;
}

FeatureMap average(const FeatureMap& a, const FeatureMap& b) {
  require_same_shape(a, b, "average");
  FeatureMap out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.data()[i] = 0.5f * (a.data()[i] + b.data()[i]);
  }
  return out;
}

FeatureMap transpose_spatial(const FeatureMap& x) {
  FeatureMap out(x.channels(), x.width(), x.height());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t y = 0; y < x.height(); ++y) {
      for (std::size_t col = 0; col < x.width(); ++col) {
        out.at(c, col, y) = x.at(c, y, col);
      }
    }
  }
  return out;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error("concat_channels: spatial mismatch " + to_string(a.shape()) +
                " vs " + to_string(b.shape()));
  }
  FeatureMap out(a.channels() + b.channels(), a.height(), a.width());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

}  // namespace wavefuse
