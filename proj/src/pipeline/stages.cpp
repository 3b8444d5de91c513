#include "pipeline/stages.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/rng.hpp"
#include "embed/providers.hpp"
#include "encode/montage.hpp"
#include "encode/png_io.hpp"
#include "eval/ordinal.hpp"
#include "eval/probe.hpp"
#include "eval/retrieval.hpp"
#include "eval/text_metrics.hpp"
#include "pipeline/synth.hpp"
#include "rag/generate.hpp"
#include "rag/index.hpp"
#include "reports/rule_engine.hpp"
#include "reports/teachers.hpp"
#include "train/checkpoint.hpp"
#include "train/trainer.hpp"
#include "version.hpp"
#include "volume/container.hpp"

namespace vlct::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr const char* kStageFile = "stage.json";

std::string env_or_empty(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  return v == nullptr ? std::string() : std::string(v);
}

std::string env_tag(const std::string& name) {
  std::string tag;
  for (char c : name) {
    tag.push_back(std::isalnum(static_cast<unsigned char>(c))
                      ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                      : '_');
  }
  return tag;
}

struct LabelRecord {
  std::string study_id;
  std::string patient_id;
  int ordinal = -1;  // -1 = abstain/failed
  std::string confidence;
};

std::vector<LabelRecord> load_labels(const fs::path& labels_path) {
  std::vector<LabelRecord> out;
  for (const json& r : read_jsonl(labels_path)) {
    out.push_back({r.at("study_id").get<std::string>(), r.value("patient_id", ""),
                   r.at("ordinal").get<int>(), r.at("confidence").get<std::string>()});
  }
  return out;
}

std::map<std::string, std::string> load_splits(const fs::path& splits_path) {
  std::map<std::string, std::string> out;
  for (const json& r : read_jsonl(splits_path)) {
    out[r.at("study_id").get<std::string>()] = r.at("split").get<std::string>();
  }
  return out;
}

json vector_to_json(const embed::Vector& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

StageRunner::StageRunner(RunConfig config) : cfg_(std::move(config)) {
  fs::create_directories(cfg_.out_dir());
  const fs::path cfg_file = cfg_.out_dir() / "run_config.json";
  const json record = {
      {"config", cfg_.effective()}, {"hash", cfg_.hash()}, {"version", kVersion}};
  write_json_file(cfg_file, record);
}

const std::vector<std::string>& StageRunner::stage_names() {
  static const std::vector<std::string> names = {
      "synth",          "ingest",        "label", "encode",   "train",
      "eval-retrieval", "eval-classify", "rag",   "gen-eval", "all"};
  return names;
}

fs::path StageRunner::stage_dir(const std::string& stage) const {
  return cfg_.out_dir() / stage;
}

bool StageRunner::stage_cached(const std::string& stage) const {
  const fs::path marker = stage_dir(stage) / kStageFile;
  if (!fs::exists(marker)) return false;
  const json j = read_json_file(marker);
  return j.value("config_hash", "") == cfg_.hash();
}

void StageRunner::mark_complete(const std::string& stage) {
  write_json_file(stage_dir(stage) / kStageFile,
                  {{"stage", stage}, {"config_hash", cfg_.hash()}, {"version", kVersion}});
}

void StageRunner::require_stage(const std::string& stage) const {
  const fs::path marker = stage_dir(stage) / kStageFile;
  require(fs::exists(marker), errc::missing_prerequisite,
          "stage '" + stage + "' has not run; run it first");
  const json j = read_json_file(marker);
  require(j.value("config_hash", "") == cfg_.hash(), errc::config_hash_mismatch,
          "stage '" + stage + "' was built with a different config (hash " +
              j.value("config_hash", "?") + ", current " + cfg_.hash() + ")");
}

bool StageRunner::run(const std::string& stage) {
  if (stage == "all") {
    bool any = false;
    for (const char* s : {"ingest", "label", "encode", "train", "eval-retrieval",
                          "eval-classify", "rag", "gen-eval"}) {
      any = run_one(s) || any;
    }
    return any;
  }
  return run_one(stage);
}

bool StageRunner::run_one(const std::string& stage) {
  const auto& names = stage_names();
  require(std::find(names.begin(), names.end(), stage) != names.end(), errc::invalid_config,
          "unknown stage: " + stage);
  if (stage_cached(stage)) {
    std::cout << "[vlct] " << stage << ": cached artifact (config hash " << cfg_.hash()
              << "), skipping\n";
    return false;
  }
  std::cout << "[vlct] " << stage << ": running\n";
  if (stage == "synth") run_synth();
  else if (stage == "ingest") run_ingest();
  else if (stage == "label") run_label();
  else if (stage == "encode") run_encode();
  else if (stage == "train") run_train();
  else if (stage == "eval-retrieval") run_eval_retrieval();
  else if (stage == "eval-classify") run_eval_classify();
  else if (stage == "rag") run_rag();
  else if (stage == "gen-eval") run_gen_eval();
  mark_complete(stage);
  return true;
}

void StageRunner::run_synth() {
  synth(cfg_.synth(), stage_dir("synth"));
}

void StageRunner::run_ingest() {
  const fs::path manifest_path = cfg_.manifest_path();
  require(fs::exists(manifest_path), errc::missing_prerequisite,
          "ingestion manifest not found: " + manifest_path.string() +
              " (run synth or point data.manifest at a dataset)");
  const auto manifest = volume::read_manifest(manifest_path);

  // group candidate series per study, preserving first-appearance order
  std::vector<std::string> study_order;
  std::map<std::string, std::vector<volume::ManifestEntry>> by_study;
  std::map<std::string, std::string> patients;
  for (const auto& e : manifest) {
    if (!by_study.count(e.study_id)) study_order.push_back(e.study_id);
    by_study[e.study_id].push_back(e);
    patients[e.study_id] = e.patient_id;
  }

  const fs::path out = stage_dir("ingest");
  const fs::path volumes_dir = out / "volumes";
  fs::create_directories(volumes_dir);
  const double target = cfg_.ingest_target_spacing();

  std::vector<volume::ManifestEntry> out_manifest(study_order.size());
  std::vector<char> kept(study_order.size(), 0);
  std::vector<json> dropped(study_order.size());

  parallel_for(study_order.size(), 4, [&](std::size_t i) {
    const std::string& study = study_order[i];
    std::vector<volume::SeriesCandidate> candidates;
    for (const auto& e : by_study[study]) {
      const auto header = volume::read_container_header(e.header_path);
      volume::SeriesCandidate c;
      c.series_id = fs::path(e.header_path).filename().string();
      c.slice_count = header.dims[0];
      c.header_path = e.header_path;
      c.payload_path = e.payload_path;
      candidates.push_back(std::move(c));
    }
    try {
      const volume::SeriesCandidate& best = volume::select_series(candidates);
      volume::VoxelVolume vol = volume::read_container(best.header_path, best.payload_path);
      vol = volume::resample_isotropic(vol, target);
      const auto paths = volume::write_container(vol, volumes_dir, study);
      out_manifest[i] = {study, paths.header.string(), paths.payload.string(), patients[study]};
      kept[i] = 1;
    } catch (const Error& e) {
      if (e.code() != errc::no_eligible_series) throw;
      dropped[i] = {{"study_id", study}, {"reason", "no series with >= 30 slices"}};
    }
  });

  std::vector<volume::ManifestEntry> final_manifest;
  std::vector<json> dropped_records;
  for (std::size_t i = 0; i < study_order.size(); ++i) {
    if (kept[i]) final_manifest.push_back(out_manifest[i]);
    else dropped_records.push_back(dropped[i]);
  }
  volume::write_manifest(out / "manifest.jsonl", final_manifest);
  write_jsonl(out / "dropped.jsonl", dropped_records);
}

void StageRunner::run_label() {
  require_stage("ingest");
  const fs::path reports_path = cfg_.reports_path();
  require(fs::exists(reports_path), errc::missing_prerequisite,
          "reports file not found: " + reports_path.string());

  const auto manifest = volume::read_manifest(stage_dir("ingest") / "manifest.jsonl");
  std::map<std::string, std::string> patients;
  std::vector<std::string> study_order;
  for (const auto& e : manifest) {
    if (!patients.count(e.study_id)) study_order.push_back(e.study_id);
    patients[e.study_id] = e.patient_id;
  }

  std::map<std::string, reports::ReportDoc> docs;
  for (const json& r : read_jsonl(reports_path)) {
    reports::ReportDoc doc = reports::ReportDoc::make(r.at("study_id").get<std::string>(),
                                                      r.value("findings", ""),
                                                      r.at("impression").get<std::string>());
    docs[doc.study_id] = std::move(doc);
  }

  const reports::RuleLexicon lexicon = cfg_.lexicon_path().empty()
                                           ? reports::RuleLexicon::builtin()
                                           : reports::RuleLexicon::load(cfg_.lexicon_path());

  std::vector<reports::ReportDoc> batch;
  for (const std::string& study : study_order) {
    const auto it = docs.find(study);
    require(it != docs.end(), errc::missing_prerequisite, "no report for study " + study);
    batch.push_back(it->second);
  }

  const fs::path out = stage_dir("label");
  fs::create_directories(out);

  // one vote function per configured teacher
  std::vector<std::vector<std::optional<reports::ActivityLabel>>> votes;
  std::vector<std::string> teacher_names;
  for (const TeacherSpec& spec : cfg_.teachers()) {
    teacher_names.push_back(spec.name);
    reports::VoteFn fn;
    if (spec.kind == "rule") {
      fn = [&lexicon](const reports::ReportDoc& doc) {
        return reports::rule_classify(doc, lexicon).label;
      };
    } else if (spec.kind == "rule_noisy") {
      const double flip = spec.flip_prob;
      const std::string name = spec.name;
      const std::uint64_t seed = cfg_.seed();
      fn = [&lexicon, flip, name, seed](const reports::ReportDoc& doc) {
        const reports::ActivityLabel base = reports::rule_classify(doc, lexicon).label;
        Rng rng(derive_seed(seed, "teacher", fnv1a64(name), fnv1a64(doc.study_id)));
        if (rng.uniform() >= flip) return base;
        const int shift = static_cast<int>(rng.uniform_int(1, 2));
        return static_cast<reports::ActivityLabel>((static_cast<int>(base) + shift) % 3);
      };
    } else {  // http
      reports::HttpEndpoint ep;
      const std::string tag = env_tag(spec.name);
      ep.base_url = env_or_empty("VLCT_TEACHER_" + tag + "_URL");
      ep.model = env_or_empty("VLCT_TEACHER_" + tag + "_MODEL");
      ep.api_key = env_or_empty("VLCT_TEACHER_" + tag + "_KEY");
      ep.audit_log = (out / ("teacher_" + spec.name + "_audit.jsonl")).string();
      require(!ep.base_url.empty(), errc::invalid_config,
              "teacher '" + spec.name + "' needs VLCT_TEACHER_" + tag + "_URL");
      auto client = std::shared_ptr<reports::ChatClient>(reports::make_http_chat_client(ep));
      const std::string name = spec.name;
      fn = [client, name](const reports::ReportDoc& doc) {
        return reports::teacher_vote(doc, {name, client});
      };
    }
    votes.push_back(reports::gather_votes(batch, fn, {}));
  }

  std::vector<json> label_records;
  std::vector<LabelRecord> labels;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    json vote_list = json::array();
    std::vector<reports::TeacherVote> ok_votes;
    bool any_failed = false;
    for (std::size_t t = 0; t < votes.size(); ++t) {
      if (votes[t][i].has_value()) {
        ok_votes.push_back({teacher_names[t], *votes[t][i]});
        vote_list.push_back({{"teacher", teacher_names[t]},
                             {"label", reports::activity_label_name(*votes[t][i])}});
      } else {
        any_failed = true;
        vote_list.push_back({{"teacher", teacher_names[t]}, {"label", "unavailable"}});
      }
    }

    LabelRecord rec;
    rec.study_id = batch[i].study_id;
    rec.patient_id = patients[rec.study_id];
    std::string label_name = "abstain";
    if (any_failed) {
      rec.ordinal = -1;
      rec.confidence = "abstain";
    } else {
      const reports::ConsensusResult c = reports::consensus(ok_votes);
      rec.confidence = reports::confidence_name(c.confidence);
      if (c.abstained()) {
        rec.ordinal = -1;
      } else {
        rec.ordinal = static_cast<int>(*c.label);
        label_name = reports::activity_label_name(*c.label);
      }
    }
    labels.push_back(rec);
    label_records.push_back({{"study_id", rec.study_id},
                             {"patient_id", rec.patient_id},
                             {"label", label_name},
                             {"ordinal", rec.ordinal},
                             {"confidence", rec.confidence},
                             {"votes", vote_list}});
  }
  write_jsonl(out / "labels.jsonl", label_records);

  // patient-level stratified split over the retained (non-abstained) studies
  std::map<std::string, std::vector<const LabelRecord*>> by_patient;
  for (const LabelRecord& r : labels) {
    if (r.ordinal >= 0) by_patient[r.patient_id].push_back(&r);
  }
  std::array<std::vector<std::string>, 3> class_patients;
  for (const auto& [patient, studies] : by_patient) {
    // patient stratum = label of its lexicographically-first study
    const LabelRecord* first = *std::min_element(
        studies.begin(), studies.end(),
        [](const LabelRecord* a, const LabelRecord* b) { return a->study_id < b->study_id; });
    class_patients[first->ordinal].push_back(patient);
  }

  const std::array<double, 3> fractions = cfg_.split_fractions();
  std::map<std::string, std::string> patient_split;
  for (int c = 0; c < 3; ++c) {
    std::vector<std::string>& patients_c = class_patients[c];
    std::sort(patients_c.begin(), patients_c.end());
    Rng rng(derive_seed(cfg_.seed(), "split", static_cast<std::uint64_t>(c)));
    for (std::size_t i = patients_c.size(); i > 1; --i) {
      std::swap(patients_c[i - 1],
                patients_c[rng.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);
    }
    const int n = static_cast<int>(patients_c.size());
    std::array<int, 3> take = largest_remainder_counts(
        n, {fractions[0], fractions[1], fractions[2]});
    int at = 0;
    const char* split_names[3] = {"train", "val", "test"};
    for (int s = 0; s < 3; ++s) {
      for (int k = 0; k < take[s]; ++k) patient_split[patients_c[at++]] = split_names[s];
    }
  }

  std::vector<json> split_records;
  for (const LabelRecord& r : labels) {
    const std::string split =
        r.ordinal < 0 ? "excluded" : patient_split.at(r.patient_id);
    split_records.push_back(
        {{"study_id", r.study_id}, {"patient_id", r.patient_id}, {"split", split}});
  }
  write_jsonl(out / "splits.jsonl", split_records);
}

void StageRunner::run_encode() {
  require_stage("ingest");
  const auto manifest = volume::read_manifest(stage_dir("ingest") / "manifest.jsonl");
  require(!manifest.empty(), errc::missing_prerequisite, "ingest produced no volumes");

  const fs::path reports_path = cfg_.reports_path();
  std::map<std::string, std::string> normalized;  // study -> normalized impression
  for (const json& r : read_jsonl(reports_path)) {
    normalized[r.at("study_id").get<std::string>()] =
        reports::normalize_impression(r.at("impression").get<std::string>());
  }

  const encode::EncodingConfig enc = cfg_.encoding();
  const train::ModelConfig model_cfg = cfg_.model();
  const embed::ToySliceProvider vision(model_cfg.dim, derive_seed(cfg_.seed(), "vision_provider"));
  const embed::ToyTextProvider text(model_cfg.dim, derive_seed(cfg_.seed(), "text_provider"));

  std::vector<std::vector<std::pair<embed::SliceRef, embed::Vector>>> slice_records(
      manifest.size());
  std::vector<json> study_records(manifest.size());

  parallel_for(manifest.size(), 4, [&](std::size_t i) {
    const auto& entry = manifest[i];
    const volume::VoxelVolume vol =
        volume::read_container(entry.header_path, entry.payload_path);
    const auto plan = encode::plan_slices(
        vol.dims, enc, derive_seed(cfg_.seed(), "plan", fnv1a64(entry.study_id)));
    for (const auto& p : plan) {
      const encode::RgbSlice slice = encode::encode_slice(vol, p.plane, p.index, enc);
      embed::SliceRef ref{entry.study_id, p.plane, p.index};
      slice_records[i].push_back({ref, vision.frozen_features(ref, slice)});
    }
    const auto it = normalized.find(entry.study_id);
    require(it != normalized.end(), errc::missing_prerequisite,
            "no report for study " + entry.study_id);
    study_records[i] = {{"study_id", entry.study_id},
                        {"normalized_impression", it->second},
                        {"slice_count", plan.size()}};
  });

  const fs::path out = stage_dir("encode");
  fs::create_directories(out);
  std::vector<std::pair<embed::SliceRef, embed::Vector>> all_slices;
  for (auto& recs : slice_records) {
    for (auto& r : recs) all_slices.push_back(std::move(r));
  }
  embed::write_slice_store(out / "slice_features.jsonl", all_slices);

  std::vector<std::pair<std::string, embed::Vector>> text_records;
  std::set<std::string> seen_keys;
  for (const auto& entry : manifest) {
    const std::string& norm = normalized.at(entry.study_id);
    const std::string key = embed::text_store_key(norm);
    if (seen_keys.insert(key).second) {
      text_records.push_back({key, text.frozen_features(norm)});
    }
  }
  embed::write_text_store(out / "text_features.jsonl", text_records);
  write_jsonl(out / "studies.jsonl", study_records);
}

namespace {

/// Loads StudyFeatures for the studies of the requested splits, in
/// studies.jsonl order.
std::vector<train::StudyFeatures> load_study_features(
    const fs::path& encode_dir, const fs::path& label_dir, int dim,
    const std::set<std::string>& splits_wanted,
    const std::map<std::string, std::string>& splits,
    const std::vector<LabelRecord>& labels) {
  std::map<std::string, int> label_by_study;
  for (const LabelRecord& r : labels) label_by_study[r.study_id] = r.ordinal;
  (void)label_dir;

  // group slice features per study, preserving file order
  std::map<std::string, std::vector<embed::Vector>> slices;
  for (const json& r : read_jsonl(encode_dir / "slice_features.jsonl")) {
    embed::Vector v(r.at("values").size());
    for (int i = 0; i < v.size(); ++i) v[i] = r.at("values")[i].get<double>();
    slices[r.at("study_id").get<std::string>()].push_back(std::move(v));
  }
  std::map<std::string, embed::Vector> texts;
  for (const json& r : read_jsonl(encode_dir / "text_features.jsonl")) {
    embed::Vector v(r.at("values").size());
    for (int i = 0; i < v.size(); ++i) v[i] = r.at("values")[i].get<double>();
    texts[r.at("key").get<std::string>()] = std::move(v);
  }

  std::vector<train::StudyFeatures> out;
  for (const json& s : read_jsonl(encode_dir / "studies.jsonl")) {
    const std::string study = s.at("study_id").get<std::string>();
    const auto split_it = splits.find(study);
    if (split_it == splits.end() || !splits_wanted.count(split_it->second)) continue;

    train::StudyFeatures f;
    f.study_id = study;
    f.normalized_impression = s.at("normalized_impression").get<std::string>();
    const auto& vecs = slices.at(study);
    require(!vecs.empty(), errc::missing_embedding, "study has no slice features: " + study);
    f.slice_features.resize(dim, static_cast<long>(vecs.size()));
    for (std::size_t j = 0; j < vecs.size(); ++j) {
      require(vecs[j].size() == dim, errc::shape_mismatch, "stored feature dimension mismatch");
      f.slice_features.col(static_cast<long>(j)) = vecs[j];
    }
    f.text_features = texts.at(embed::text_store_key(f.normalized_impression));
    const auto lbl = label_by_study.find(study);
    f.label = lbl == label_by_study.end() ? -1 : lbl->second;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

void StageRunner::run_train() {
  require_stage("encode");
  require_stage("label");
  const auto labels = load_labels(stage_dir("label") / "labels.jsonl");
  const auto splits = load_splits(stage_dir("label") / "splits.jsonl");
  const train::ModelConfig model_cfg = cfg_.model();

  const auto train_set = load_study_features(stage_dir("encode"), stage_dir("label"),
                                             model_cfg.dim, {"train"}, splits, labels);
  const auto val_set = load_study_features(stage_dir("encode"), stage_dir("label"),
                                           model_cfg.dim, {"val"}, splits, labels);
  require(!train_set.empty() && !val_set.empty(), errc::empty_split,
          "train/val splits are empty; need more studies or different fractions");

  const fs::path out = stage_dir("train");
  fs::create_directories(out);
  const train::TrainResult result =
      train::train(train_set, val_set, model_cfg, cfg_.train(), out / "epochs.jsonl");
  train::save_checkpoint(out / "checkpoint.bin", result.best_params,
                         {{"config_hash", cfg_.hash()}, {"best_epoch", result.best_epoch}});
}

void StageRunner::run_eval_retrieval() {
  require_stage("train");
  const auto labels = load_labels(stage_dir("label") / "labels.jsonl");
  const auto splits = load_splits(stage_dir("label") / "splits.jsonl");
  const train::ModelParams params =
      train::load_checkpoint(stage_dir("train") / "checkpoint.bin");

  const auto test_set = load_study_features(stage_dir("encode"), stage_dir("label"),
                                            params.config.dim, {"test"}, splits, labels);
  require(!test_set.empty(), errc::empty_split, "test split is empty");

  const int n = static_cast<int>(test_set.size());
  embed::Matrix volume_m(params.config.dim, n), text_m(params.config.dim, n);
  std::vector<std::string> normalized;
  std::vector<json> embedding_records;
  for (int i = 0; i < n; ++i) {
    volume_m.col(i) = train::embed_volume(params, test_set[i]);
    text_m.col(i) = train::embed_text(params, test_set[i]);
    normalized.push_back(test_set[i].normalized_impression);
    embedding_records.push_back({{"study_id", test_set[i].study_id},
                                 {"volume", vector_to_json(volume_m.col(i))},
                                 {"text", vector_to_json(text_m.col(i))}});
  }

  const std::vector<int> classes = eval::duplicate_classes(normalized);
  const std::vector<int> ks = cfg_.eval_ks();
  const embed::Matrix sim_i2t = volume_m.transpose() * text_m;
  const eval::RetrievalMetrics i2t = eval::retrieval_eval(sim_i2t, classes, ks);
  const eval::RetrievalMetrics t2i =
      eval::retrieval_eval(sim_i2t.transpose(), classes, ks);

  const fs::path out = stage_dir("eval-retrieval");
  fs::create_directories(out);
  auto to_json = [&](const char* direction, const eval::RetrievalMetrics& m) {
    json rec = {{"direction", direction}, {"mrr", m.mrr}, {"n_queries", n}};
    for (const auto& [k, v] : m.recall_at) rec["recall_at_" + std::to_string(k)] = v;
    return rec;
  };
  write_jsonl(out / "retrieval.jsonl", {to_json("image_to_text", i2t),
                                        to_json("text_to_image", t2i)});
  write_jsonl(out / "embeddings.jsonl", embedding_records);
  write_consolidated_report();
}

void StageRunner::run_eval_classify() {
  require_stage("train");
  const auto labels = load_labels(stage_dir("label") / "labels.jsonl");
  const auto splits = load_splits(stage_dir("label") / "splits.jsonl");
  const train::ModelParams params =
      train::load_checkpoint(stage_dir("train") / "checkpoint.bin");

  const auto train_set = load_study_features(stage_dir("encode"), stage_dir("label"),
                                             params.config.dim, {"train"}, splits, labels);
  const auto test_set = load_study_features(stage_dir("encode"), stage_dir("label"),
                                            params.config.dim, {"test"}, splits, labels);
  require(!train_set.empty() && !test_set.empty(), errc::empty_split,
          "train/test splits are empty");

  auto features_of = [&](const std::vector<train::StudyFeatures>& set, std::vector<int>& y) {
    embed::Matrix x(set.size(), params.config.dim);
    for (std::size_t i = 0; i < set.size(); ++i) {
      x.row(static_cast<long>(i)) = train::embed_volume(params, set[i]).transpose();
      y.push_back(set[i].label);
    }
    return x;
  };
  std::vector<int> y_train, y_test;
  const embed::Matrix x_train = features_of(train_set, y_train);
  const embed::Matrix x_test = features_of(test_set, y_test);

  const eval::ProbeModel probe = eval::probe_fit(x_train, y_train, 1.0);
  const std::vector<int> predicted = eval::probe_predict(probe, x_test);
  const eval::ClassificationMetrics metrics = eval::classify_metrics(predicted, y_test);

  json confusion = json::array();
  for (const auto& row : metrics.confusion) confusion.push_back({row[0], row[1], row[2]});
  const json record = {
      {"accuracy", metrics.accuracy},
      {"macro_f1", metrics.macro_f1},
      {"f1", {metrics.f1[0], metrics.f1[1], metrics.f1[2]}},
      {"precision", {metrics.precision[0], metrics.precision[1], metrics.precision[2]}},
      {"recall", {metrics.recall[0], metrics.recall[1], metrics.recall[2]}},
      {"confusion", confusion},
      {"class_weights",
       {probe.class_weights[0], probe.class_weights[1], probe.class_weights[2]}},
      {"n_train", static_cast<int>(train_set.size())},
      {"n_test", static_cast<int>(test_set.size())},
  };
  const fs::path out = stage_dir("eval-classify");
  fs::create_directories(out);
  write_jsonl(out / "classification.jsonl", {record});
  write_consolidated_report();
}

void StageRunner::run_rag() {
  require_stage("train");
  const auto labels = load_labels(stage_dir("label") / "labels.jsonl");
  const auto splits = load_splits(stage_dir("label") / "splits.jsonl");
  const train::ModelParams params =
      train::load_checkpoint(stage_dir("train") / "checkpoint.bin");

  const auto train_set = load_study_features(stage_dir("encode"), stage_dir("label"),
                                             params.config.dim, {"train"}, splits, labels);
  const auto test_set = load_study_features(stage_dir("encode"), stage_dir("label"),
                                            params.config.dim, {"test"}, splits, labels);
  require(!train_set.empty() && !test_set.empty(), errc::empty_split,
          "train/test splits are empty");

  // reports keyed by study for the retrieved impression text
  std::map<std::string, std::string> impressions;
  for (const json& r : read_jsonl(cfg_.reports_path())) {
    impressions[r.at("study_id").get<std::string>()] = r.at("impression").get<std::string>();
  }

  const int n_train = static_cast<int>(train_set.size());
  embed::Matrix index_rows(n_train, params.config.dim);
  std::vector<rag::IndexEntry> entries;
  std::vector<embed::Vector> train_text_units(n_train);
  for (int i = 0; i < n_train; ++i) {
    index_rows.row(i) = train::embed_volume(params, train_set[i]).transpose();
    entries.push_back({train_set[i].study_id, impressions.at(train_set[i].study_id)});
    train_text_units[i] = train::embed_text(params, train_set[i]);
  }
  const rag::EmbeddingIndex index = rag::EmbeddingIndex::build(index_rows, entries);

  rag::MmrConfig mmr = cfg_.mmr();
  const int k = std::min(cfg_.rag_k(), index.size());
  const int pool_size = std::min(mmr.pool_size, index.size());
  mmr.pool_size = pool_size;
  mmr.k = std::min(k, pool_size);

  const std::string generator = cfg_.rag_generator();
  std::unique_ptr<rag::GenerationClient> http_client;
  if (generator == "http") {
    rag::GenerationEndpoint ep;
    ep.base_url = env_or_empty("VLCT_GEN_URL");
    ep.model = env_or_empty("VLCT_GEN_MODEL");
    ep.api_key = env_or_empty("VLCT_GEN_KEY");
    require(!ep.base_url.empty(), errc::invalid_config,
            "rag.generator=http needs VLCT_GEN_URL");
    http_client = rag::make_http_generation_client(ep);
  }
  rag::RetrievalEchoClient echo_client;

  const bool want_montage = cfg_.rag_attach_montage() || cfg_.montage_emit();
  std::map<std::string, std::pair<std::string, std::string>> volume_paths;
  if (want_montage) {
    for (const auto& e : volume::read_manifest(stage_dir("ingest") / "manifest.jsonl")) {
      volume_paths[e.study_id] = {e.header_path, e.payload_path};
    }
  }

  const fs::path out = stage_dir("rag");
  fs::create_directories(out);
  std::vector<json> generated;
  for (const train::StudyFeatures& study : test_set) {
    const embed::Vector query = train::embed_volume(params, study);
    const auto pool_hits = index.topk(query, mmr.enabled ? pool_size : k);

    std::vector<std::string> selected;
    std::vector<std::string> selected_ids;
    if (mmr.enabled) {
      std::vector<rag::MmrCandidate> pool;
      for (const auto& hit : pool_hits) {
        pool.push_back({hit, train_text_units[hit.row]});
      }
      for (const auto& c : rag::mmr_select(pool, mmr)) {
        selected.push_back(c.hit.impression);
        selected_ids.push_back(c.hit.study_id);
      }
    } else {
      for (const auto& hit : pool_hits) {
        selected.push_back(hit.impression);
        selected_ids.push_back(hit.study_id);
      }
    }

    rag::GenerationRequest request;
    request.prompt = rag::assemble_prompt(selected, {study.study_id, 3, 5});
    if (want_montage) {
      const auto& [header, payload] = volume_paths.at(study.study_id);
      const volume::VoxelVolume vol = volume::read_container(header, payload);
      const encode::MontageImage montage = encode::build_montage(
          vol, cfg_.montage(), derive_seed(cfg_.seed(), "montage", fnv1a64(study.study_id)));
      if (cfg_.montage_emit()) {
        encode::write_png(out / "montages" / (study.study_id + ".png"), montage.pixels);
      }
      // base64 attachment only for endpoints that can accept it
      if (cfg_.rag_attach_montage() && generator == "http") {
        const auto png = encode::encode_png(montage.pixels);
        static const char* alphabet =
            "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        std::string b64;
        b64.reserve((png.size() + 2) / 3 * 4);
        for (std::size_t i = 0; i < png.size(); i += 3) {
          std::uint32_t word = png[i] << 16;
          if (i + 1 < png.size()) word |= png[i + 1] << 8;
          if (i + 2 < png.size()) word |= png[i + 2];
          b64.push_back(alphabet[(word >> 18) & 63]);
          b64.push_back(alphabet[(word >> 12) & 63]);
          b64.push_back(i + 1 < png.size() ? alphabet[(word >> 6) & 63] : '=');
          b64.push_back(i + 2 < png.size() ? alphabet[word & 63] : '=');
        }
        request.montage_png_base64 = std::move(b64);
      }
    }

    rag::GenerationResult result;
    if (generator == "echo") {
      echo_client.set_candidates(selected);
      result = rag::generate_with_filter(request, echo_client);
    } else {
      result = rag::generate_with_filter(request, *http_client);
    }

    generated.push_back({{"study_id", study.study_id},
                         {"retrieved", selected_ids},
                         {"text", result.text},
                         {"degraded", result.degraded},
                         {"rounds", result.rounds}});
  }
  write_jsonl(out / "generated.jsonl", generated);
}

void StageRunner::run_gen_eval() {
  require_stage("rag");
  require_stage("label");
  const auto labels = load_labels(stage_dir("label") / "labels.jsonl");
  const auto splits = load_splits(stage_dir("label") / "splits.jsonl");

  std::map<std::string, std::string> impressions;
  for (const json& r : read_jsonl(cfg_.reports_path())) {
    impressions[r.at("study_id").get<std::string>()] = r.at("impression").get<std::string>();
  }
  std::map<std::string, int> label_by_study;
  for (const LabelRecord& r : labels) label_by_study[r.study_id] = r.ordinal;

  std::vector<std::string> generated_texts;
  std::vector<int> truth;
  double rouge_sum = 0.0, bleu_sum = 0.0;
  int n = 0;
  for (const json& g : read_jsonl(stage_dir("rag") / "generated.jsonl")) {
    const std::string study = g.at("study_id").get<std::string>();
    require(splits.count(study) && splits.at(study) == "test", errc::internal,
            "generated study is not in the test split: " + study);
    const std::string& reference = impressions.at(study);
    const std::string text = g.at("text").get<std::string>();
    rouge_sum += eval::rouge_l_f1(text, reference);
    bleu_sum += eval::bleu_sentence(text, reference);
    generated_texts.push_back(text);
    truth.push_back(label_by_study.at(study));
    ++n;
  }
  require(n > 0, errc::empty_input, "no generated impressions to evaluate");

  std::array<double, 3> dist{0, 0, 0};
  for (int y : truth) dist[y] += 1.0;
  for (double& p : dist) p /= n;

  const reports::RuleLexicon lexicon = cfg_.lexicon_path().empty()
                                           ? reports::RuleLexicon::builtin()
                                           : reports::RuleLexicon::load(cfg_.lexicon_path());
  const eval::LabelConsistencyReport consistency =
      eval::label_consistency(generated_texts, truth, dist, lexicon);

  const json record = {
      {"n", n},
      {"rouge_l_f1", rouge_sum / n},
      {"bleu", bleu_sum / n},
      {"exact_accuracy", consistency.ordinal.exact_accuracy},
      {"ordinal_mae", consistency.ordinal.mae},
      {"within_one", consistency.ordinal.within_one},
      {"chance_within_one_prevalence", consistency.ordinal.chance_within_one_prevalence},
      {"chance_within_one_uniform", consistency.ordinal.chance_within_one_uniform},
      {"macro_f1", consistency.classification.macro_f1},
  };
  const fs::path out = stage_dir("gen-eval");
  fs::create_directories(out);
  write_jsonl(out / "generation.jsonl", {record});
  write_consolidated_report();
}

void StageRunner::write_consolidated_report() {
  std::vector<json> records;
  std::string text;
  char line[256];

  const fs::path retrieval_path = stage_dir("eval-retrieval") / "retrieval.jsonl";
  if (fs::exists(retrieval_path)) {
    text += "== Cross-modal retrieval (test split) ==\n";
    std::snprintf(line, sizeof(line), "%-16s %8s %8s %8s %8s\n", "direction", "R@1", "R@5",
                  "R@10", "MRR");
    text += line;
    for (const json& r : read_jsonl(retrieval_path)) {
      json rec = r;
      rec["table"] = "retrieval";
      records.push_back(rec);
      std::snprintf(line, sizeof(line), "%-16s %8.3f %8.3f %8.3f %8.3f\n",
                    r.at("direction").get<std::string>().c_str(),
                    r.value("recall_at_1", 0.0), r.value("recall_at_5", 0.0),
                    r.value("recall_at_10", 0.0), r.at("mrr").get<double>());
      text += line;
    }
    text += "\n";
  }

  const fs::path classify_path = stage_dir("eval-classify") / "classification.jsonl";
  if (fs::exists(classify_path)) {
    text += "== Disease activity classification (test split) ==\n";
    for (const json& r : read_jsonl(classify_path)) {
      json rec = r;
      rec["table"] = "classification";
      records.push_back(rec);
      std::snprintf(line, sizeof(line),
                    "accuracy %.3f  macro-F1 %.3f  F1(normal) %.3f  F1(possibly) %.3f  "
                    "F1(abnormal) %.3f\n",
                    r.at("accuracy").get<double>(), r.at("macro_f1").get<double>(),
                    r.at("f1")[0].get<double>(), r.at("f1")[1].get<double>(),
                    r.at("f1")[2].get<double>());
      text += line;
      text += "confusion (rows = true normal/possibly/abnormal, cols = predicted):\n";
      for (int i = 0; i < 3; ++i) {
        std::snprintf(line, sizeof(line), "  %4d %4d %4d\n",
                      r.at("confusion")[i][0].get<int>(), r.at("confusion")[i][1].get<int>(),
                      r.at("confusion")[i][2].get<int>());
        text += line;
      }
    }
    text += "\n";
  }

  const fs::path gen_path = stage_dir("gen-eval") / "generation.jsonl";
  if (fs::exists(gen_path)) {
    text += "== Generation consistency (test split) ==\n";
    for (const json& r : read_jsonl(gen_path)) {
      json rec = r;
      rec["table"] = "generation";
      records.push_back(rec);
      std::snprintf(line, sizeof(line),
                    "ROUGE-L %.3f  BLEU %.2f  exact %.3f  MAE %.3f  within-1 %.3f\n",
                    r.at("rouge_l_f1").get<double>(), r.at("bleu").get<double>(),
                    r.at("exact_accuracy").get<double>(), r.at("ordinal_mae").get<double>(),
                    r.at("within_one").get<double>());
      text += line;
      std::snprintf(line, sizeof(line),
                    "chance within-1: prevalence-matched %.3f, uniform %.3f\n",
                    r.at("chance_within_one_prevalence").get<double>(),
                    r.at("chance_within_one_uniform").get<double>());
      text += line;
    }
    text += "\n";
  }

  write_jsonl(cfg_.out_dir() / "report.jsonl", records);
  write_text_file(cfg_.out_dir() / "report.txt", text);
}

}  // namespace vlct::pipeline
