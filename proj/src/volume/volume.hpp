#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vlct::volume {

inline constexpr int kHuMin = -1000;
inline constexpr int kHuMax = 1000;
inline constexpr int kMinSliceCount = 30;

/// A CT volume in Hounsfield units. Data is stored C-order with axes
/// (axial slice, row, column) = (z, y, x); spacing is (z, y, x) millimeters.
struct VoxelVolume {
  std::string study_id;
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<std::int16_t> data;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * dims[1] + y) * dims[2] + x;
  }
  std::int16_t at(int z, int y, int x) const { return data[index(z, y, x)]; }

  /// Checks dimensions, spacing, payload size, and the HU clipping range.
  void validate() const;
};

struct SeriesCandidate {
  std::string series_id;
  int slice_count = 0;
  std::optional<VoxelVolume> volume;      // materialized series
  std::string header_path, payload_path;  // deferred series
};

/// Converts stored pixel values to HU: clamp(round(raw*slope + intercept), -1000, 1000)
/// with round-half-away-from-zero.
VoxelVolume rescale_to_hu(const std::vector<std::int32_t>& raw, const std::array<int, 3>& dims,
                          const std::array<double, 3>& spacing, const std::string& study_id,
                          double slope, double intercept);

/// Resamples onto an isotropic grid at target_spacing_mm using trilinear
/// interpolation. Output sample i lies at physical coordinate i*target along
/// each axis; coordinates outside the input grid clamp to the edge. Output
/// dimension per axis is max(1, round(dim*spacing/target)).
VoxelVolume resample_isotropic(const VoxelVolume& v, double target_spacing_mm = 1.0);

/// Picks the largest series with at least 30 slices; ties break toward the
/// lexicographically smallest series_id. Deterministic under input permutation.
const SeriesCandidate& select_series(const std::vector<SeriesCandidate>& candidates);

}  // namespace vlct::volume
