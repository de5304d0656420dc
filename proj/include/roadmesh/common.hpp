#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace roadmesh {

inline constexpr int kNumClasses = 5;
inline constexpr int kColorCodeDim = 32;

/// Road-surface semantic classes. Labels >= kFirstDynamicLabel mark moving objects.
enum class SemanticClass : std::uint8_t {
  LaneMarking = 0,
  Curb = 1,
  Manhole = 2,
  Road = 3,
  Background = 4,
};
inline constexpr std::uint8_t kFirstDynamicLabel = 5;

/// Bad input, violated precondition or malformed file content.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Filesystem or encoding failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value encountered during optimization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interleaved row-major image.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> pixels;

  Image() = default;
  Image(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  T& operator()(int x, int y, int c = 0) { return pixels[index(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const { return pixels[index(x, y, c)]; }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(int w, int h) const { return width == w && height == h; }
};

using RgbImage = Image<double>;
using LabelImage = Image<std::uint8_t>;
using MaskImage = Image<std::uint8_t>;

}  // namespace roadmesh
