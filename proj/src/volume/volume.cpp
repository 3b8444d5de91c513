#include "volume/volume.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace vlct::volume {

namespace {

std::int16_t clamp_hu(double value) {
  const double r = std::round(value);  // half away from zero
  return static_cast<std::int16_t>(std::clamp(r, double(kHuMin), double(kHuMax)));
}

}  // namespace

void VoxelVolume::validate() const {
  require(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1, errc::empty_volume,
          "all dimensions must be >= 1");
  for (double s : spacing) {
    require(std::isfinite(s) && s > 0.0, errc::invalid_spacing,
            "spacing components must be positive and finite");
  }
  require(data.size() == voxel_count(), errc::shape_mismatch, "payload size mismatch");
  for (std::int16_t v : data) {
    require(v >= kHuMin && v <= kHuMax, errc::shape_mismatch,
            "voxel outside the clipped HU range");
  }
}

VoxelVolume rescale_to_hu(const std::vector<std::int32_t>& raw, const std::array<int, 3>& dims,
                          const std::array<double, 3>& spacing, const std::string& study_id,
                          double slope, double intercept) {
  require(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1, errc::empty_volume,
          "raw volume has an empty dimension");
  require(std::isfinite(slope) && std::isfinite(intercept), errc::invalid_rescale,
          "rescale parameters must be finite");
  require(slope != 0.0, errc::invalid_rescale, "rescale slope must be nonzero");

  VoxelVolume v;
  v.study_id = study_id;
  v.dims = dims;
  v.spacing = spacing;
  const std::size_t n = v.voxel_count();
  require(raw.size() == n, errc::shape_mismatch, "raw payload does not match dimensions");
  v.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    v.data[i] = clamp_hu(static_cast<double>(raw[i]) * slope + intercept);
  }
  v.validate();
  return v;
}

VoxelVolume resample_isotropic(const VoxelVolume& v, double target_spacing_mm) {
  v.validate();
  require(std::isfinite(target_spacing_mm) && target_spacing_mm > 0.0, errc::invalid_spacing,
          "target spacing must be positive");

  const double t = target_spacing_mm;
  std::array<int, 3> out_dims;
  for (int a = 0; a < 3; ++a) {
    out_dims[a] = std::max(1, static_cast<int>(std::llround(v.dims[a] * v.spacing[a] / t)));
  }

  VoxelVolume out;
  out.study_id = v.study_id;
  out.dims = out_dims;
  out.spacing = {t, t, t};
  out.data.resize(out.voxel_count());

  auto sample_axis = [&](int a, int i) {
    // input-grid coordinate of output sample i, clamped to the grid
    double c = i * t / v.spacing[a];
    c = std::clamp(c, 0.0, static_cast<double>(v.dims[a] - 1));
    const int lo = static_cast<int>(c);
    const int hi = std::min(lo + 1, v.dims[a] - 1);
    return std::tuple<int, int, double>(lo, hi, c - lo);
  };

  std::size_t idx = 0;
  for (int z = 0; z < out_dims[0]; ++z) {
    auto [z0, z1, fz] = sample_axis(0, z);
    for (int y = 0; y < out_dims[1]; ++y) {
      auto [y0, y1, fy] = sample_axis(1, y);
      for (int x = 0; x < out_dims[2]; ++x) {
        auto [x0, x1, fx] = sample_axis(2, x);
        const double c000 = v.at(z0, y0, x0), c001 = v.at(z0, y0, x1);
        const double c010 = v.at(z0, y1, x0), c011 = v.at(z0, y1, x1);
        const double c100 = v.at(z1, y0, x0), c101 = v.at(z1, y0, x1);
        const double c110 = v.at(z1, y1, x0), c111 = v.at(z1, y1, x1);
        const double c00 = c000 + (c001 - c000) * fx;
        const double c01 = c010 + (c011 - c010) * fx;
        const double c10 = c100 + (c101 - c100) * fx;
        const double c11 = c110 + (c111 - c110) * fx;
        const double c0 = c00 + (c01 - c00) * fy;
        const double c1 = c10 + (c11 - c10) * fy;
        out.data[idx++] = clamp_hu(c0 + (c1 - c0) * fz);
      }
    }
  }
  return out;
}

const SeriesCandidate& select_series(const std::vector<SeriesCandidate>& candidates) {
  require(!candidates.empty(), errc::empty_input, "no series candidates");
  const SeriesCandidate* best = nullptr;
  for (const SeriesCandidate& c : candidates) {
    if (c.slice_count < kMinSliceCount) continue;
    if (best == nullptr || c.slice_count > best->slice_count ||
        (c.slice_count == best->slice_count && c.series_id < best->series_id)) {
      best = &c;
    }
  }
  require(best != nullptr, errc::no_eligible_series,
          "every series has fewer than 30 slices");
  return *best;
}

}  // namespace vlct::volume
