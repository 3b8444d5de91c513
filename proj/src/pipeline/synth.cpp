#include "pipeline/synth.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "common/rng.hpp"
#include "volume/container.hpp"

namespace vlct::pipeline {

namespace fs = std::filesystem;

std::array<int, 3> largest_remainder_counts(int n, const std::array<double, 3>& distribution) {
  std::array<int, 3> counts;
  std::array<double, 3> remainders;
  int assigned = 0;
  for (int c = 0; c < 3; ++c) {
    const double exact = n * distribution[c];
    counts[c] = static_cast<int>(std::floor(exact));
    remainders[c] = exact - counts[c];
    assigned += counts[c];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (int i = 0; assigned < n; ++i, ++assigned) counts[order[i % 3]] += 1;
  return counts;
}

const std::vector<ReportTemplate>& report_templates() {
  static const std::vector<ReportTemplate> templates = {
      // normal
      {0, "No evidence of active inflammatory bowel disease.",
       "Small bowel loops are normal in caliber with unremarkable enhancement. No wall "
       "thickening or submucosal edema. Solid organs are unremarkable."},
      {0, "Normal CT enterography. No acute findings.",
       "The bowel demonstrates normal wall thickness and enhancement throughout. No stricture, "
       "fistula, or abscess. Mesentery is unremarkable."},
      {0, "Stable postoperative appearance without evidence of enteritis.",
       "Postsurgical changes of prior resection with intact anastomosis. No colitis or "
       "ileitis. No obstruction."},
      // possibly abnormal
      {1, "Findings may represent mild terminal ileitis.",
       "Borderline wall thickening of the terminal ileum of indeterminate significance. No "
       "abscess or fistula."},
      {1, "Cannot exclude early active enteritis; follow-up imaging suggested.",
       "Subtle mural hyperenhancement of a distal ileal loop which may reflect early "
       "inflammatory change. No penetrating complication."},
      {1, "Possible focal colitis, though this is equivocal.",
       "Segmental colonic wall thickening is possibly related to underdistention. No fistula "
       "or abscess."},
      {1, "Limited study due to motion artifact; no definite active inflammation identified.",
       "Image quality is degraded by patient motion. The bowel is incompletely evaluated. No "
       "gross wall thickening."},
      // abnormal
      {2, "Active terminal ileitis with wall thickening and mural enhancement.",
       "Mural thickening and hyperenhancement of the terminal ileum with adjacent fat "
       "stranding."},
      {2, "Acute colitis involving the descending colon.",
       "Wall thickening of the descending colon with engorged vasa recta and adjacent fat "
       "stranding."},
      {2, "Active ileitis complicated by intra-abdominal abscess.",
       "Terminal ileitis with a rim-enhancing fluid collection compatible with abscess."},
      {2, "Enteritis with submucosal edema consistent with active inflammation.",
       "Diffuse small bowel wall thickening with submucosal edema and mucosal "
       "hyperenhancement."},
      {2, "Penetrating disease with fistula formation and adjacent phlegmon.",
       "Ileocolic fistulous tract with adjacent inflammatory phlegmon. Upstream dilatation of "
       "the ileum."},
  };
  return templates;
}

namespace {

std::vector<int> class_template_ids(int label) {
  std::vector<int> ids;
  const auto& all = report_templates();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].label == label) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

volume::VoxelVolume make_volume(const SynthSpec& spec, const std::string& study_id,
                                const std::array<double, 3>& spacing, int label,
                                int template_id, Rng& rng) {
  const int nz = spec.dims[0], ny = spec.dims[1], nx = spec.dims[2];
  const double cy = 0.5 * (ny - 1), cx = 0.5 * (nx - 1);
  const double ay = 0.42 * ny, ax = 0.42 * nx;

  // class-dependent bright ring ("wall thickening") with seeded geometry
  const bool has_ring = label >= 1;
  const double ring_cy = cy + rng.uniform(-5.0, 5.0);
  const double ring_cx = cx + rng.uniform(-5.0, 5.0);
  const double ring_r = rng.uniform(7.0, 10.0);
  const double ring_intensity = (label == 1 ? 70.0 : 200.0) * spec.signal;
  const int ring_extent = label == 1 ? 4 : 8;
  const int ring_z0 =
      static_cast<int>(rng.uniform(0.35, 0.60) * nz) - ring_extent / 2;

  // template-keyed marker blob so duplicate-template studies are identifiable
  const double angle =
      2.0 * M_PI * template_id / static_cast<double>(report_templates().size());
  const double marker_cy = cy + 0.30 * ny * std::sin(angle);
  const double marker_cx = cx + 0.30 * nx * std::cos(angle);
  const double marker_r = 2.5;
  const int marker_z0 = static_cast<int>(0.30 * nz);
  const int marker_z1 = static_cast<int>(0.70 * nz);

  std::vector<std::int32_t> raw(static_cast<std::size_t>(nz) * ny * nx);
  std::size_t at = 0;
  for (int z = 0; z < nz; ++z) {
    const bool ring_slice = has_ring && z >= ring_z0 && z < ring_z0 + ring_extent;
    const bool marker_slice = z >= marker_z0 && z < marker_z1;
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x, ++at) {
        const double ey = (y - cy) / ay, ex = (x - cx) / ax;
        double hu;
        if (ey * ey + ex * ex > 1.0) {
          hu = -1000.0;  // air
        } else {
          hu = 30.0 + rng.normal(0.0, spec.noise_hu);
          if (ring_slice) {
            const double dr = std::hypot(y - ring_cy, x - ring_cx) - ring_r;
            if (std::abs(dr) <= 1.8) hu += ring_intensity;
          }
          if (marker_slice && std::hypot(y - marker_cy, x - marker_cx) <= marker_r) {
            hu += 160.0;
          }
        }
        raw[at] = static_cast<std::int32_t>(std::llround(hu)) + 1024;  // stored pixel value
      }
    }
  }
  return volume::rescale_to_hu(raw, {nz, ny, nx}, spacing, study_id, 1.0, -1024.0);
}

volume::VoxelVolume make_decoy_volume(const std::string& study_id) {
  volume::VoxelVolume v;
  v.study_id = study_id;
  v.dims = {20, 16, 16};  // below the 30-slice filter
  v.spacing = {1.0, 1.0, 1.0};
  v.data.assign(v.voxel_count(), -1000);
  return v;
}

}  // namespace

SynthResult synth(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  const fs::path volumes_dir = out_dir / "volumes";
  fs::create_directories(volumes_dir);

  const std::array<int, 3> counts = largest_remainder_counts(spec.n_studies,
                                                             spec.class_distribution);
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c) labels.insert(labels.end(), counts[c], c);
  Rng label_rng(derive_seed(spec.seed, "synth_labels"));
  for (std::size_t i = labels.size(); i > 1; --i) {
    std::swap(labels[i - 1], labels[label_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);
  }

  SynthResult result;
  std::vector<volume::ManifestEntry> manifest;
  std::vector<json> reports, truth;

  std::string prev_patient;
  for (int i = 0; i < spec.n_studies; ++i) {
    Rng rng(derive_seed(spec.seed, "synth_study", static_cast<std::uint64_t>(i)));
    SynthStudy study;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%04d", i);
    study.study_id = id;
    study.label = labels[i];
    const std::vector<int> pool = class_template_ids(study.label);
    study.template_id = pool[rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1)];
    const ReportTemplate& tpl = report_templates()[study.template_id];
    study.impression = tpl.impression;
    study.findings = tpl.findings;

    const bool repeat_patient = spec.patients_repeat_every > 0 && i > 0 &&
                                i % spec.patients_repeat_every == spec.patients_repeat_every - 1;
    study.patient_id = repeat_patient && !prev_patient.empty()
                           ? prev_patient
                           : "pat-" + std::string(id + 6);
    prev_patient = study.patient_id;

    const bool anisotropic = spec.anisotropic_every > 0 &&
                             i % spec.anisotropic_every == spec.anisotropic_every - 1;
    const std::array<double, 3> spacing{anisotropic ? 1.25 : 1.0, 1.0, 1.0};
    const volume::VoxelVolume vol =
        make_volume(spec, study.study_id, spacing, study.label, study.template_id, rng);
    const auto paths = volume::write_container(vol, volumes_dir, study.study_id + "-a");

    const bool decoy = spec.decoy_series_every > 0 &&
                       i % spec.decoy_series_every == spec.decoy_series_every - 1;
    if (decoy) {
      const auto decoy_paths =
          volume::write_container(make_decoy_volume(study.study_id), volumes_dir,
                                  study.study_id + "-b");
      // decoy listed first; series selection must still pick the larger one
      manifest.push_back({study.study_id, decoy_paths.header.string(),
                          decoy_paths.payload.string(), study.patient_id});
    }
    manifest.push_back(
        {study.study_id, paths.header.string(), paths.payload.string(), study.patient_id});

    reports.push_back({{"study_id", study.study_id},
                       {"findings", study.findings},
                       {"impression", study.impression}});
    truth.push_back({{"study_id", study.study_id},
                     {"patient_id", study.patient_id},
                     {"label", study.label},
                     {"template_id", study.template_id}});
    result.studies.push_back(std::move(study));
  }

  result.manifest = out_dir / "manifest.jsonl";
  result.reports = out_dir / "reports.jsonl";
  result.truth = out_dir / "truth.jsonl";
  volume::write_manifest(result.manifest, manifest);
  write_jsonl(result.reports, reports);
  write_jsonl(result.truth, truth);
  return result;
}

}  // namespace vlct::pipeline
