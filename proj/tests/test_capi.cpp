#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "vlct.h"

namespace fs = std::filesystem;

TEST_CASE("version and error strings are always available") {
  CHECK(std::string(vlct_version()) == "0.1.0");
  CHECK(vlct_last_error() != nullptr);
}

TEST_CASE("labeler handle classifies reports through the C surface") {
  vlct_labeler* labeler = nullptr;
  REQUIRE(vlct_labeler_open(nullptr, &labeler) == VLCT_OK);
  REQUIRE(labeler != nullptr);

  int32_t label = -1;
  CHECK(vlct_labeler_classify(labeler, "",
                              "No evidence of active inflammatory bowel disease.",
                              &label) == VLCT_OK);
  CHECK(label == 0);
  CHECK(vlct_labeler_classify(labeler, "", "Findings may represent mild ileitis.", &label) ==
        VLCT_OK);
  CHECK(label == 1);
  CHECK(vlct_labeler_classify(labeler, "", "Active ileitis with abscess.", &label) == VLCT_OK);
  CHECK(label == 2);
  vlct_labeler_close(labeler);

  // explicit lexicon path
  const std::string lexicon = std::string(VLCT_SOURCE_DIR) + "/data/lexicon.txt";
  vlct_labeler* from_file = nullptr;
  REQUIRE(vlct_labeler_open(lexicon.c_str(), &from_file) == VLCT_OK);
  CHECK(vlct_labeler_classify(from_file, "", "Acute colitis.", &label) == VLCT_OK);
  CHECK(label == 2);
  vlct_labeler_close(from_file);

  CHECK(vlct_labeler_open("/nonexistent/lexicon.txt", &from_file) == VLCT_ERROR_IO);
}

TEST_CASE("normalization through the C buffer contract") {
  char buf[64];
  size_t needed = 0;
  CHECK(vlct_normalize_impression("  Stable   Exam. ", buf, sizeof(buf), &needed) == VLCT_OK);
  CHECK(std::string(buf) == "stable exam");
  CHECK(needed == 11);

  char tiny[4];
  CHECK(vlct_normalize_impression("longer text", tiny, sizeof(tiny), &needed) ==
        VLCT_ERROR_VALIDATION);
  CHECK(std::string(tiny) == "lon");  // truncated but NUL-terminated
  CHECK(needed == 11);
}

TEST_CASE("consensus codes match the truth table") {
  int32_t label = 9, confidence = 9;
  const int32_t unanimous[3] = {2, 2, 2};
  CHECK(vlct_consensus(unanimous, &label, &confidence) == VLCT_OK);
  CHECK(label == 2);
  CHECK(confidence == 2);

  const int32_t majority[3] = {0, 2, 0};
  CHECK(vlct_consensus(majority, &label, &confidence) == VLCT_OK);
  CHECK(label == 0);
  CHECK(confidence == 1);

  const int32_t split[3] = {0, 1, 2};
  CHECK(vlct_consensus(split, &label, &confidence) == VLCT_OK);
  CHECK(label == -1);
  CHECK(confidence == 0);

  const int32_t bad[3] = {0, 1, 7};
  CHECK(vlct_consensus(bad, &label, &confidence) == VLCT_ERROR_VALIDATION);
}

TEST_CASE("text metric and chance baseline entry points") {
  double value = 0.0;
  CHECK(vlct_rouge_l_f1("the cat", "the cat sat", &value) == VLCT_OK);
  CHECK(value == 0.8);
  CHECK(vlct_bleu_sentence("a b c d", "a b c d", &value) == VLCT_OK);
  CHECK(value == 100.0);

  double prevalence = 0.0, uniform = 0.0;
  CHECK(vlct_ordinal_chance(39.0 / 125, 28.0 / 125, 58.0 / 125, &prevalence, &uniform) ==
        VLCT_OK);
  CHECK(std::abs(prevalence - 0.7105) <= 5e-4);
  CHECK(std::abs(uniform - 0.7413) <= 5e-4);
  CHECK(vlct_ordinal_chance(0.9, 0.9, 0.9, &prevalence, &uniform) == VLCT_ERROR_VALIDATION);
}

TEST_CASE("multipositive loss over the C buffer layout") {
  // identity similarity, singleton classes, tau = 1 -> ln(1 + e^-1)
  const double sim[4] = {1.0, 0.0, 0.0, 1.0};
  const int32_t classes[2] = {0, 1};
  double loss = 0.0;
  REQUIRE(vlct_multipositive_loss(sim, 2, classes, 1.0, &loss) == VLCT_OK);
  CHECK(std::abs(loss - std::log(1.0 + std::exp(-1.0))) <= 1e-9);

  // shared class -> all mutual positives -> zero loss
  const int32_t shared[2] = {3, 3};
  REQUIRE(vlct_multipositive_loss(sim, 2, shared, 1.0, &loss) == VLCT_OK);
  CHECK(std::abs(loss) <= 1e-12);

  CHECK(vlct_multipositive_loss(sim, 2, classes, 0.0, &loss) == VLCT_ERROR_VALIDATION);
  CHECK(vlct_multipositive_loss(nullptr, 2, classes, 1.0, &loss) == VLCT_ERROR_VALIDATION);
  CHECK(std::string(vlct_last_error()).size() > 0);
}

TEST_CASE("pipeline handle lifecycle, hash, and stage errors") {
  vlct_pipeline* p = nullptr;
  REQUIRE(vlct_pipeline_open(nullptr, &p) == VLCT_OK);

  char hash[17];
  REQUIRE(vlct_pipeline_config_hash(p, hash, sizeof(hash)) == VLCT_OK);
  CHECK(std::strlen(hash) == 16);

  CHECK(vlct_pipeline_set_seed(p, 7) == VLCT_OK);
  char hash2[17];
  REQUIRE(vlct_pipeline_config_hash(p, hash2, sizeof(hash2)) == VLCT_OK);
  CHECK(std::string(hash) != hash2);

  const fs::path out = fs::temp_directory_path() / "vlct_capi_run";
  fs::remove_all(out);
  CHECK(vlct_pipeline_set_out_dir(p, out.string().c_str()) == VLCT_OK);

  int executed = -1;
  CHECK(vlct_pipeline_run(p, "eval-retrieval", &executed) == VLCT_ERROR_MISSING_PREREQ);
  CHECK(vlct_pipeline_run(p, "not-a-stage", &executed) == VLCT_ERROR_VALIDATION);
  vlct_pipeline_close(p);

  CHECK(vlct_pipeline_open("/nonexistent/config.json", &p) == VLCT_ERROR_IO);
}

TEST_CASE("pipeline json config runs synth through the C surface") {
  const fs::path out = fs::temp_directory_path() / "vlct_capi_synth";
  fs::remove_all(out);
  const std::string config = R"({
    "out_dir": ")" + out.string() + R"(",
    "synth": {"n_studies": 6, "dims": [32, 36, 36]}
  })";
  vlct_pipeline* p = nullptr;
  REQUIRE(vlct_pipeline_open_json(config.c_str(), &p) == VLCT_OK);
  int executed = 0;
  CHECK(vlct_pipeline_run(p, "synth", &executed) == VLCT_OK);
  CHECK(executed == 1);
  CHECK(fs::exists(out / "synth" / "manifest.jsonl"));
  // cached rerun
  CHECK(vlct_pipeline_run(p, "synth", &executed) == VLCT_OK);
  CHECK(executed == 0);
  vlct_pipeline_close(p);

  CHECK(vlct_pipeline_open_json("{not valid json", &p) == VLCT_ERROR);
}
