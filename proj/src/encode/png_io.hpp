#pragma once

#include <filesystem>
#include <vector>

#include "encode/image.hpp"

namespace vlct::encode {

/// 8-bit RGB PNG bytes; channel values are round(p*255) clamped to [0,255].
std::vector<unsigned char> encode_png(const Image& img);

void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace vlct::encode
