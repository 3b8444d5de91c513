#include "encode/image.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace vlct::encode {

Image resize_bilinear(const Image& src, int out_height, int out_width) {
  require(src.height >= 1 && src.width >= 1, errc::empty_input, "cannot resize empty image");
  require(out_height >= 1 && out_width >= 1, errc::invalid_config, "output size must be >= 1");
  if (out_height == src.height && out_width == src.width) return src;

  Image dst(out_height, out_width);
  const double sy = static_cast<double>(src.height) / out_height;
  const double sx = static_cast<double>(src.width) / out_width;
  for (int r = 0; r < out_height; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < out_width; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = src.at(y0, x0, ch) + (src.at(y0, x1, ch) - src.at(y0, x0, ch)) * wx;
        const double bot = src.at(y1, x0, ch) + (src.at(y1, x1, ch) - src.at(y1, x0, ch)) * wx;
        dst.at(r, c, ch) = static_cast<float>(top + (bot - top) * wy);
      }
    }
  }
  return dst;
}

}  // namespace vlct::encode
