#include "encode/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace vlct::encode {

void HuWindow::validate() const {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, errc::invalid_config,
          "HU window requires lo < hi");
}

const char* plane_name(Plane p) {
  switch (p) {
    case Plane::kAxial: return "axial";
    case Plane::kCoronal: return "coronal";
    case Plane::kSagittal: return "sagittal";
  }
  return "?";
}

Plane plane_from_name(const std::string& name) {
  if (name == "axial") return Plane::kAxial;
  if (name == "coronal") return Plane::kCoronal;
  if (name == "sagittal") return Plane::kSagittal;
  fail(errc::invalid_config, "unknown plane: " + name);
}

void EncodingConfig::validate() const {
  require(!planes.empty(), errc::invalid_config, "at least one plane required");
  for (Plane p : planes) {
    auto it = counts.find(p);
    require(it != counts.end() && it->second >= 1, errc::invalid_config,
            std::string("slice count for ") + plane_name(p) + " must be >= 1");
  }
  require(0.0 <= range_lo && range_lo < range_hi && range_hi <= 1.0, errc::invalid_config,
          "fraction range must satisfy 0 <= lo < hi <= 1");
  for (const HuWindow& w : windows) w.validate();
}

int plane_extent(const std::array<int, 3>& dims, Plane p) {
  return dims[static_cast<int>(p)];
}

namespace {

int fraction_to_index(double f, int dim) {
  const double idx = f * (dim - 1);
  return static_cast<int>(std::clamp(std::round(idx), 0.0, double(dim - 1)));
}

}  // namespace

std::vector<SlicePlanEntry> plan_slices(const std::array<int, 3>& dims,
                                        const EncodingConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<SlicePlanEntry> plan;
  std::set<std::pair<int, int>> seen;
  const double lo = config.range_lo, hi = config.range_hi;

  for (Plane p : config.planes) {
    const int dim = plane_extent(dims, p);
    require(dim >= 1, errc::empty_volume, "plane extent must be >= 1");
    const int count = config.counts.at(p);
    Rng rng(derive_seed(seed, "plan", static_cast<std::uint64_t>(p)));
    for (int k = 0; k < count; ++k) {
      double f;
      if (config.sampling == Sampling::kLinear) {
        f = (count == 1) ? 0.5 * (lo + hi) : lo + k * (hi - lo) / (count - 1);
      } else {
        const double width = (hi - lo) / count;
        f = lo + (k + rng.uniform()) * width;
      }
      const int idx = fraction_to_index(f, dim);
      if (seen.insert({static_cast<int>(p), idx}).second) {
        plan.push_back({p, idx, f});
      }
    }
  }
  return plan;
}

double window_to_unit(double hu, const HuWindow& w) {
  return std::clamp((hu - w.lo) / (w.hi - w.lo), 0.0, 1.0);
}

namespace {

struct PlaneView {
  const volume::VoxelVolume* v;
  Plane plane;
  int height, width;

  PlaneView(const volume::VoxelVolume& vol, Plane p) : v(&vol), plane(p) {
    switch (p) {
      case Plane::kAxial: height = vol.dims[1]; width = vol.dims[2]; break;
      case Plane::kCoronal: height = vol.dims[0]; width = vol.dims[2]; break;
      case Plane::kSagittal: height = vol.dims[0]; width = vol.dims[1]; break;
    }
  }

  double hu(int slice, int r, int c) const {
    switch (plane) {
      case Plane::kAxial: return v->at(slice, r, c);
      case Plane::kCoronal: return v->at(r, slice, c);
      case Plane::kSagittal: return v->at(r, c, slice);
    }
    return 0.0;
  }
};

}  // namespace

RgbSlice encode_slice(const volume::VoxelVolume& v, Plane plane, int index,
                      const EncodingConfig& config) {
  config.validate();
  const int dim = plane_extent(v.dims, plane);
  require(index >= 0 && index < dim, errc::index_out_of_range,
          "slice index outside plane extent");

  PlaneView view(v, plane);
  RgbSlice s;
  s.plane = plane;
  s.fraction = dim > 1 ? static_cast<double>(index) / (dim - 1) : 0.5;
  s.height = view.height;
  s.width = view.width;
  s.pixels.resize(static_cast<std::size_t>(s.height) * s.width * 3);

  const HuWindow& w0 = config.windows[0];
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      switch (config.mode) {
        case EncodingMode::kGrayscale: {
          const float g = static_cast<float>(window_to_unit(view.hu(index, r, c), w0));
          s.at(r, c, 0) = s.at(r, c, 1) = s.at(r, c, 2) = g;
          break;
        }
        case EncodingMode::kMultiwindowRgb: {
          const double hu = view.hu(index, r, c);
          for (int ch = 0; ch < 3; ++ch) {
            s.at(r, c, ch) = static_cast<float>(window_to_unit(hu, config.windows[ch]));
          }
          break;
        }
        case EncodingMode::kAdjacentRgb: {
          for (int ch = 0; ch < 3; ++ch) {
            const int neighbor = std::clamp(index + ch - 1, 0, dim - 1);
            s.at(r, c, ch) = static_cast<float>(window_to_unit(view.hu(neighbor, r, c), w0));
          }
          break;
        }
      }
    }
  }
  return s;
}

}  // namespace vlct::encode
