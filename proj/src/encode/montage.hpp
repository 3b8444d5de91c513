#pragma once

#include <cstdint>
#include <optional>

#include "encode/encoding.hpp"
#include "encode/image.hpp"

namespace vlct::encode {

struct JitterConfig {
  int slice_jitter = 3;  // planned index perturbed by +-3 slices
  int hu_jitter = 25;    // both window bounds shifted by the same +-25 HU draw
};

struct MontageConfig {
  std::map<Plane, int> counts = {{Plane::kAxial, 16}, {Plane::kCoronal, 10}, {Plane::kSagittal, 10}};
  double range_lo = 0.20;
  double range_hi = 0.80;
  HuWindow window{-160, 240};
  int tile_size = 256;
  int columns = 3;
  int max_side = 1536;
  std::optional<JitterConfig> jitter;  // disabled by default
  void validate() const;
};

struct MontageImage {
  Image pixels;
  // per-plane block layout, in plane order (axial, coronal, sagittal)
  struct Block {
    Plane plane;
    int rows, columns, slice_count;
  };
  std::vector<Block> layout;
};

/// The unscaled montage canvas: per plane, linearly sampled slices encoded as
/// adjacent-slice RGB under the montage window, resized to tile_size, laid out
/// row-major in `columns` columns (trailing cells black), blocks stacked
/// vertically. Exposed separately so the grid can be inspected before the
/// final resize blends tile borders.
MontageImage compose_montage_canvas(const volume::VoxelVolume& v, const MontageConfig& cfg,
                                    std::uint64_t seed);

/// Canvas plus the final bilinear resize down to max_side on the longest side.
/// With jitter disabled this is a pure function of (volume, config).
MontageImage build_montage(const volume::VoxelVolume& v, const MontageConfig& cfg,
                           std::uint64_t seed);

}  // namespace vlct::encode
