#include "encode/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/jsonl.hpp"

namespace vlct::encode {

namespace {
std::vector<unsigned char> quantize(const Image& img) {
  std::vector<unsigned char> bytes(img.rgb.size());
  for (std::size_t i = 0; i < img.rgb.size(); ++i) {
    const double v = std::round(static_cast<double>(img.rgb[i]) * 255.0);
    bytes[i] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
  }
  return bytes;
}
}  // namespace

std::vector<unsigned char> encode_png(const Image& img) {
  require(img.height >= 1 && img.width >= 1, errc::empty_input, "cannot encode empty image");
  const std::vector<unsigned char> pixels = quantize(img);

  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    fail(errc::internal, std::string("png size probe failed: ") + pi.message);
  }
  std::vector<unsigned char> out(size);
  if (!png_image_write_to_memory(&pi, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    fail(errc::internal, std::string("png encode failed: ") + pi.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  const std::vector<unsigned char> bytes = encode_png(img);
  write_binary_file(path, bytes.data(), bytes.size());
}

}  // namespace vlct::encode
