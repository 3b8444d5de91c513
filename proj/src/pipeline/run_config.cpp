#include "pipeline/run_config.hpp"

#include <cinttypes>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace vlct::pipeline {

namespace fs = std::filesystem;

void SynthSpec::validate() const {
  require(n_studies >= 1, errc::invalid_config, "synth needs at least one study");
  double sum = 0.0;
  for (double p : class_distribution) {
    require(p >= 0.0, errc::invalid_config, "class probabilities must be nonnegative");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-6, errc::invalid_config,
          "class distribution must sum to 1");
  require(dims[0] >= volume::kMinSliceCount, errc::invalid_config,
          "synthetic volumes must pass the 30-slice filter");
  require(dims[1] >= 16 && dims[2] >= 16, errc::invalid_config,
          "synthetic in-plane dimensions must be >= 16");
}

json RunConfig::default_json() {
  return json{
      {"seed", 42},
      {"out_dir", "runs/default"},
      {"data",
       {{"manifest", ""}, {"reports", ""}, {"lexicon", ""}}},
      {"ingest", {{"target_spacing_mm", 1.0}}},
      {"encoding",
       {{"mode", "multiwindow_rgb"},
        {"planes", {"axial", "coronal", "sagittal"}},
        {"counts", {16, 6, 6}},
        {"sampling", "linear"},
        {"range", {0.2, 0.8}},
        {"windows", {{-150.0, 250.0}, {-1000.0, 1000.0}, {0.0, 500.0}}}}},
      {"montage",
       {{"counts", {16, 10, 10}},
        {"window", {-160.0, 240.0}},
        {"jitter", false},
        {"emit", false},
        {"max_side", 1536}}},
      {"model",
       {{"dim", 512},
        {"aggregator", "mean"},
        {"lora", {{"rank", 4}, {"vision", true}, {"text", true}}},
        {"projector_on_text", false},
        {"dropout", 0.1},
        {"heads", 4},
        {"max_slices", 64},
        {"init_sigma", 0.02},
        {"tau_init", 0.07}}},
      {"train",
       {{"lr", 5e-5},
        {"weight_decay", 1e-2},
        {"batch_size", 8},
        {"max_epochs", 10},
        {"patience", 3},
        {"clip_norm", 1.0}}},
      {"split", {{"train", 0.781}, {"val", 0.102}, {"test", 0.117}}},
      {"label",
       {{"teachers",
         {{{"name", "rule"}, {"kind", "rule"}},
          {{"name", "teacher-b"}, {"kind", "rule_noisy"}, {"flip_prob", 0.0}},
          {{"name", "teacher-c"}, {"kind", "rule_noisy"}, {"flip_prob", 0.0}}}}}},
      {"eval", {{"ks", {1, 5, 10}}}},
      {"rag",
       {{"k", 5},
        {"mmr", {{"enabled", true}, {"pool_size", 50}, {"lambda", 0.7}}},
        {"generator", "echo"},
        {"attach_montage", false}}},
      {"synth",
       {{"n_studies", 100},
        {"class_distribution", {0.312, 0.224, 0.464}},
        {"dims", {40, 48, 48}},
        {"signal", 1.0},
        {"noise_hu", 12.0},
        {"anisotropic_every", 4},
        {"decoy_series_every", 5},
        {"patients_repeat_every", 0}}},
  };
}

namespace {

void merge_into(json& base, const json& user, const std::string& path) {
  require(user.is_object(), errc::invalid_config, "config section must be an object: " + path);
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    require(base.contains(key), errc::invalid_config, "unknown config key: " + here);
    // teacher specs are replaced wholesale and validated separately
    if (base[key].is_object() && value.is_object() && here != "label.teachers") {
      merge_into(base[key], value, here);
    } else {
      base[key] = value;
    }
  }
}

std::array<double, 2> pair_of(const json& j, const std::string& what) {
  require(j.is_array() && j.size() == 2, errc::invalid_config, what + " must be a pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

RunConfig RunConfig::from_json(const json& user) {
  RunConfig cfg;
  cfg.effective_ = default_json();
  if (!user.is_null()) merge_into(cfg.effective_, user, "");
  cfg.rehash();
  // force early validation of the typed views
  cfg.encoding();
  cfg.montage();
  cfg.model();
  cfg.train().validate();
  cfg.mmr().validate();
  cfg.synth().validate();
  cfg.teachers();
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) { return from_json(read_json_file(path)); }

void RunConfig::rehash() {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(effective_.dump()));
  hash_ = buf;
}

void RunConfig::override_seed(std::uint64_t seed) {
  effective_["seed"] = seed;
  rehash();
}

void RunConfig::override_out_dir(const std::string& out_dir) {
  effective_["out_dir"] = out_dir;
  rehash();
}

std::uint64_t RunConfig::seed() const { return effective_.at("seed").get<std::uint64_t>(); }

fs::path RunConfig::out_dir() const { return effective_.at("out_dir").get<std::string>(); }

encode::EncodingConfig RunConfig::encoding() const {
  const json& e = effective_.at("encoding");
  encode::EncodingConfig c;
  const std::string mode = e.at("mode").get<std::string>();
  if (mode == "grayscale") {
    c.mode = encode::EncodingMode::kGrayscale;
  } else if (mode == "adjacent_rgb") {
    c.mode = encode::EncodingMode::kAdjacentRgb;
  } else if (mode == "multiwindow_rgb") {
    c.mode = encode::EncodingMode::kMultiwindowRgb;
  } else {
    fail(errc::invalid_config, "unknown encoding mode: " + mode);
  }
  c.planes.clear();
  c.counts.clear();
  const json& planes = e.at("planes");
  const json& counts = e.at("counts");
  require(planes.size() >= 1 && planes.size() == counts.size(), errc::invalid_config,
          "encoding planes/counts must align");
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const encode::Plane p = encode::plane_from_name(planes[i].get<std::string>());
    c.planes.push_back(p);
    c.counts[p] = counts[i].get<int>();
  }
  c.sampling = e.at("sampling").get<std::string>() == "stratified"
                   ? encode::Sampling::kStratified
                   : encode::Sampling::kLinear;
  const auto range = pair_of(e.at("range"), "encoding.range");
  c.range_lo = range[0];
  c.range_hi = range[1];
  const json& windows = e.at("windows");
  require(windows.size() == 3, errc::invalid_config, "encoding.windows must hold three windows");
  for (int i = 0; i < 3; ++i) {
    const auto w = pair_of(windows[i], "encoding.windows[i]");
    c.windows[i] = {w[0], w[1]};
  }
  c.validate();
  return c;
}

encode::MontageConfig RunConfig::montage() const {
  const json& m = effective_.at("montage");
  encode::MontageConfig c;
  const json& counts = m.at("counts");
  require(counts.size() == 3, errc::invalid_config, "montage.counts must hold three counts");
  c.counts = {{encode::Plane::kAxial, counts[0].get<int>()},
              {encode::Plane::kCoronal, counts[1].get<int>()},
              {encode::Plane::kSagittal, counts[2].get<int>()}};
  const auto w = pair_of(m.at("window"), "montage.window");
  c.window = {w[0], w[1]};
  c.max_side = m.at("max_side").get<int>();
  if (m.at("jitter").get<bool>()) c.jitter = encode::JitterConfig{};
  c.validate();
  return c;
}

bool RunConfig::montage_emit() const { return effective_.at("montage").at("emit").get<bool>(); }

train::ModelConfig RunConfig::model() const {
  return train::ModelConfig::from_json(effective_.at("model"));
}

train::TrainConfig RunConfig::train() const {
  train::TrainConfig c = train::TrainConfig::from_json(effective_.at("train"));
  c.seed = seed();
  return c;
}

std::array<double, 3> RunConfig::split_fractions() const {
  const json& s = effective_.at("split");
  std::array<double, 3> f{s.at("train").get<double>(), s.at("val").get<double>(),
                          s.at("test").get<double>()};
  const double sum = f[0] + f[1] + f[2];
  require(std::abs(sum - 1.0) <= 1e-6, errc::invalid_config, "split fractions must sum to 1");
  return f;
}

std::vector<TeacherSpec> RunConfig::teachers() const {
  const json& list = effective_.at("label").at("teachers");
  require(list.is_array() && list.size() == 3, errc::invalid_config,
          "exactly three teachers are required");
  std::vector<TeacherSpec> out;
  for (const json& t : list) {
    TeacherSpec spec;
    spec.name = t.at("name").get<std::string>();
    spec.kind = t.at("kind").get<std::string>();
    require(spec.kind == "rule" || spec.kind == "rule_noisy" || spec.kind == "http",
            errc::invalid_config, "unknown teacher kind: " + spec.kind);
    spec.flip_prob = t.value("flip_prob", 0.0);
    require(spec.flip_prob >= 0.0 && spec.flip_prob < 1.0, errc::invalid_config,
            "teacher flip_prob must be in [0, 1)");
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<int> RunConfig::eval_ks() const {
  std::vector<int> ks;
  for (const json& k : effective_.at("eval").at("ks")) ks.push_back(k.get<int>());
  require(!ks.empty(), errc::invalid_config, "eval.ks must be nonempty");
  return ks;
}

rag::MmrConfig RunConfig::mmr() const {
  const json& m = effective_.at("rag").at("mmr");
  rag::MmrConfig c;
  c.enabled = m.at("enabled").get<bool>();
  c.pool_size = m.at("pool_size").get<int>();
  c.lambda = m.at("lambda").get<double>();
  c.k = rag_k();
  return c;
}

int RunConfig::rag_k() const { return effective_.at("rag").at("k").get<int>(); }

std::string RunConfig::rag_generator() const {
  const std::string g = effective_.at("rag").at("generator").get<std::string>();
  require(g == "echo" || g == "http", errc::invalid_config, "rag.generator must be echo or http");
  return g;
}

bool RunConfig::rag_attach_montage() const {
  return effective_.at("rag").at("attach_montage").get<bool>();
}

double RunConfig::ingest_target_spacing() const {
  const double t = effective_.at("ingest").at("target_spacing_mm").get<double>();
  require(t > 0.0, errc::invalid_config, "ingest.target_spacing_mm must be positive");
  return t;
}

SynthSpec RunConfig::synth() const {
  const json& s = effective_.at("synth");
  SynthSpec spec;
  spec.n_studies = s.at("n_studies").get<int>();
  const json& dist = s.at("class_distribution");
  require(dist.size() == 3, errc::invalid_config, "class_distribution must hold three values");
  for (int i = 0; i < 3; ++i) spec.class_distribution[i] = dist[i].get<double>();
  const json& dims = s.at("dims");
  require(dims.size() == 3, errc::invalid_config, "synth.dims must hold three values");
  for (int i = 0; i < 3; ++i) spec.dims[i] = dims[i].get<int>();
  spec.signal = s.at("signal").get<double>();
  spec.noise_hu = s.at("noise_hu").get<double>();
  spec.anisotropic_every = s.at("anisotropic_every").get<int>();
  spec.decoy_series_every = s.at("decoy_series_every").get<int>();
  spec.patients_repeat_every = s.at("patients_repeat_every").get<int>();
  spec.seed = seed();
  spec.validate();
  return spec;
}

fs::path RunConfig::manifest_path() const {
  const std::string p = effective_.at("data").at("manifest").get<std::string>();
  return p.empty() ? out_dir() / "synth" / "manifest.jsonl" : fs::path(p);
}

fs::path RunConfig::reports_path() const {
  const std::string p = effective_.at("data").at("reports").get<std::string>();
  return p.empty() ? out_dir() / "synth" / "reports.jsonl" : fs::path(p);
}

fs::path RunConfig::lexicon_path() const {
  return effective_.at("data").at("lexicon").get<std::string>();
}

}  // namespace vlct::pipeline
