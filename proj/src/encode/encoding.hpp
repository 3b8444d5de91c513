#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "volume/volume.hpp"

namespace vlct::encode {

struct HuWindow {
  double lo = 0.0;
  double hi = 1.0;
  void validate() const;
};

enum class Plane { kAxial = 0, kCoronal = 1, kSagittal = 2 };
enum class EncodingMode { kGrayscale, kAdjacentRgb, kMultiwindowRgb };
enum class Sampling { kLinear, kStratified };

const char* plane_name(Plane p);
Plane plane_from_name(const std::string& name);

struct EncodingConfig {
  EncodingMode mode = EncodingMode::kMultiwindowRgb;
  std::vector<Plane> planes = {Plane::kAxial, Plane::kCoronal, Plane::kSagittal};
  std::map<Plane, int> counts = {{Plane::kAxial, 16}, {Plane::kCoronal, 6}, {Plane::kSagittal, 6}};
  Sampling sampling = Sampling::kLinear;
  double range_lo = 0.20;
  double range_hi = 0.80;
  // R, G, B windows for MultiwindowRgb; windows[0] is the single window for
  // the other modes. Defaults: soft tissue / full dynamic range / enhanced.
  std::array<HuWindow, 3> windows = {{{-150, 250}, {-1000, 1000}, {0, 500}}};
  void validate() const;
};

struct SlicePlanEntry {
  Plane plane;
  int index;
  double fraction;
};

/// Extent of each plane's index axis: axial -> z, coronal -> y, sagittal -> x.
int plane_extent(const std::array<int, 3>& dims, Plane p);

/// Plans slice positions per plane over the fractional range. Linear sampling
/// spaces `count` fractions evenly over [lo, hi] inclusive (a single slice
/// takes the midpoint); stratified sampling draws one seeded-uniform fraction
/// per equal-width bin. Fractions map to index round(f*(dim-1)); duplicate
/// (plane, index) pairs are removed preserving order.
std::vector<SlicePlanEntry> plan_slices(const std::array<int, 3>& dims,
                                        const EncodingConfig& config, std::uint64_t seed);

/// clamp((hu - lo) / (hi - lo), 0, 1)
double window_to_unit(double hu, const HuWindow& w);

/// A three-channel slice image with values in [0,1] (row-major, interleaved).
struct RgbSlice {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // height*width*3
  Plane plane = Plane::kAxial;
  double fraction = 0.0;

  float& at(int r, int c, int ch) { return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
  float at(int r, int c, int ch) const {
    return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
  }
};

/// Encodes one planned slice. Grayscale replicates a single windowed channel;
/// MultiwindowRgb applies the three configured windows to the same slice;
/// AdjacentRgb windows slices (index-1, index, index+1) with edge clamping.
RgbSlice encode_slice(const volume::VoxelVolume& v, Plane plane, int index,
                      const EncodingConfig& config);

}  // namespace vlct::encode
