#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavefuse {

// Thrown for every contract violation in the library (bad shapes, non-finite
// values, malformed files). The CLI maps it to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  std::size_t plane() const { return height * width; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

// Channels x height x width, 32-bit reals, row-major (channel, row, column).
class FeatureMap {
 public:
  FeatureMap() = default;
  explicit FeatureMap(Shape shape);
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width)
      : FeatureMap(Shape{channels, height, width}) {}
  // Takes ownership of `data`; rejects length mismatch and non-finite values.
  FeatureMap(Shape shape, std::vector<float> data);

  static FeatureMap filled(Shape shape, float value);

  const Shape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  std::span<float> channel(std::size_t c) {
    return std::span<float>(data_).subspan(c * shape_.plane(), shape_.plane());
  }
  std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(data_).subspan(c * shape_.plane(),
                                                 shape_.plane());
  }

  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }

  bool all_finite() const;
  // Bitwise equality of shape and payload.
  bool operator==(const FeatureMap& other) const;

 private:
  Shape shape_;
  std::vector<float> data_;
};

// Throws Error naming `what` when any value is NaN or infinite.
void require_finite(const FeatureMap& x, const char* what);
void require_same_shape(const FeatureMap& a, const FeatureMap& b,
                        const char* what);

double sum_of_squares(const FeatureMap& x);
double max_abs_diff(const FeatureMap& a, const FeatureMap& b);
double inner_product(const FeatureMap& a, const FeatureMap& b);

FeatureMap add(const FeatureMap& a, const FeatureMap& b);
FeatureMap scale(const FeatureMap& a, float factor);
FeatureMap average(const FeatureMap& a, const FeatureMap& b);
FeatureMap transpose_spatial(const FeatureMap& x);
// Channelwise concatenation; both maps share height and width.
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

}  // namespace wavefuse
