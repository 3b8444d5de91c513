#pragma once

#include <vector>

namespace vlct::encode {

/// Float RGB image, row-major interleaved, values in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> rgb;

  Image() = default;
  Image(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, 0.0f) {}

  float& at(int r, int c, int ch) { return rgb[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
  float at(int r, int c, int ch) const {
    return rgb[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
  }
};

/// Bilinear resize with center-aligned sample mapping and edge clamping.
Image resize_bilinear(const Image& src, int out_height, int out_width);

}  // namespace vlct::encode
