#include "encode/montage.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace vlct::encode {

void MontageConfig::validate() const {
  for (const auto& [plane, count] : counts) {
    (void)plane;
    require(count >= 1, errc::invalid_config, "montage counts must be >= 1");
  }
  require(0.0 <= range_lo && range_lo < range_hi && range_hi <= 1.0, errc::invalid_config,
          "fraction range must satisfy 0 <= lo < hi <= 1");
  window.validate();
  require(tile_size >= 1 && columns >= 1 && max_side >= 1, errc::invalid_config,
          "montage geometry must be positive");
}

MontageImage compose_montage_canvas(const volume::VoxelVolume& v, const MontageConfig& cfg,
                                    std::uint64_t seed) {
  cfg.validate();
  v.validate();
  require(v.dims[0] >= volume::kMinSliceCount, errc::volume_too_small,
          "montage requires at least 30 axial slices");

  Rng rng(derive_seed(seed, "montage"));
  HuWindow window = cfg.window;
  if (cfg.jitter) {
    const double shift = static_cast<double>(
        rng.uniform_int(-cfg.jitter->hu_jitter, cfg.jitter->hu_jitter));
    window.lo += shift;
    window.hi += shift;
  }

  // Plan per plane with linear sampling over the montage range, then encode
  // each slice in adjacent-RGB form under the (possibly jittered) window.
  EncodingConfig enc;
  enc.mode = EncodingMode::kAdjacentRgb;
  enc.sampling = Sampling::kLinear;
  enc.range_lo = cfg.range_lo;
  enc.range_hi = cfg.range_hi;
  enc.windows[0] = window;
  enc.planes.clear();
  for (Plane p : {Plane::kAxial, Plane::kCoronal, Plane::kSagittal}) {
    if (cfg.counts.count(p)) {
      enc.planes.push_back(p);
      enc.counts[p] = cfg.counts.at(p);
    }
  }

  std::vector<SlicePlanEntry> plan = plan_slices(v.dims, enc, seed);
  if (cfg.jitter) {
    for (SlicePlanEntry& e : plan) {
      const int dim = plane_extent(v.dims, e.plane);
      const int delta = static_cast<int>(
          rng.uniform_int(-cfg.jitter->slice_jitter, cfg.jitter->slice_jitter));
      e.index = std::clamp(e.index + delta, 0, dim - 1);
    }
  }

  MontageImage out;
  int total_rows = 0;
  for (Plane p : enc.planes) {
    int n = 0;
    for (const SlicePlanEntry& e : plan) n += (e.plane == p);
    const int rows = (n + cfg.columns - 1) / cfg.columns;
    out.layout.push_back({p, rows, cfg.columns, n});
    total_rows += rows;
  }

  Image canvas(total_rows * cfg.tile_size, cfg.columns * cfg.tile_size);  // zero = black padding
  int row_offset = 0;
  std::size_t plan_pos = 0;
  for (const MontageImage::Block& block : out.layout) {
    for (int i = 0; i < block.slice_count; ++i, ++plan_pos) {
      const SlicePlanEntry& e = plan[plan_pos];
      RgbSlice slice = encode_slice(v, e.plane, e.index, enc);
      Image tile(slice.height, slice.width);
      tile.rgb = slice.pixels;
      tile = resize_bilinear(tile, cfg.tile_size, cfg.tile_size);
      const int r0 = (row_offset + i / cfg.columns) * cfg.tile_size;
      const int c0 = (i % cfg.columns) * cfg.tile_size;
      for (int r = 0; r < cfg.tile_size; ++r) {
        for (int c = 0; c < cfg.tile_size; ++c) {
          for (int ch = 0; ch < 3; ++ch) canvas.at(r0 + r, c0 + c, ch) = tile.at(r, c, ch);
        }
      }
    }
    row_offset += block.rows;
  }

  out.pixels = std::move(canvas);
  return out;
}

MontageImage build_montage(const volume::VoxelVolume& v, const MontageConfig& cfg,
                           std::uint64_t seed) {
  MontageImage m = compose_montage_canvas(v, cfg, seed);
  const int longest = std::max(m.pixels.height, m.pixels.width);
  if (longest > cfg.max_side) {
    const double scale = static_cast<double>(cfg.max_side) / longest;
    const int h = std::max(1, static_cast<int>(std::llround(m.pixels.height * scale)));
    const int w = std::max(1, static_cast<int>(std::llround(m.pixels.width * scale)));
    m.pixels = resize_bilinear(m.pixels, h, w);
  }
  return m;
}

}  // namespace vlct::encode
