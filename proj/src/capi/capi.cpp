#include "vlct.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "common/error.hpp"
#include "eval/ordinal.hpp"
#include "eval/text_metrics.hpp"
#include "pipeline/stages.hpp"
#include "reports/consensus.hpp"
#include "reports/rule_engine.hpp"
#include "train/loss.hpp"
#include "version.hpp"

namespace {

thread_local std::string t_last_error = "ok";

vlct_status status_of(vlct::errc code) {
  using vlct::errc;
  switch (code) {
    case errc::teacher_unavailable:
    case errc::generation_unavailable:
      return VLCT_ERROR_UNAVAILABLE;
    case errc::io_error:
      return VLCT_ERROR_IO;
    case errc::missing_prerequisite:
    case errc::config_hash_mismatch:
      return VLCT_ERROR_MISSING_PREREQ;
    case errc::internal:
      return VLCT_ERROR;
    default:
      return VLCT_ERROR_VALIDATION;
  }
}

template <typename Fn>
vlct_status guarded(Fn&& fn) {
  try {
    fn();
    return VLCT_OK;
  } catch (const vlct::Error& e) {
    t_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return VLCT_ERROR;
  } catch (...) {
    t_last_error = "unknown error";
    return VLCT_ERROR;
  }
}

vlct_status invalid(const char* message) {
  t_last_error = message;
  return VLCT_ERROR_VALIDATION;
}

}  // namespace

struct vlct_pipeline {
  vlct::pipeline::RunConfig config;
};

struct vlct_labeler {
  vlct::reports::RuleLexicon lexicon;
};

extern "C" {

const char* vlct_version(void) { return vlct::kVersion; }

const char* vlct_last_error(void) { return t_last_error.c_str(); }

vlct_status vlct_pipeline_open(const char* config_path, vlct_pipeline** out) {
  if (out == nullptr) return invalid("out pointer is null");
  *out = nullptr;
  return guarded([&] {
    auto cfg = config_path == nullptr
                   ? vlct::pipeline::RunConfig::from_json(nlohmann::json())
                   : vlct::pipeline::RunConfig::load(config_path);
    *out = new vlct_pipeline{std::move(cfg)};
  });
}

vlct_status vlct_pipeline_open_json(const char* config_json, vlct_pipeline** out) {
  if (out == nullptr) return invalid("out pointer is null");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json j;
    if (config_json != nullptr && config_json[0] != '\0') {
      j = nlohmann::json::parse(config_json);
    }
    *out = new vlct_pipeline{vlct::pipeline::RunConfig::from_json(j)};
  });
}

vlct_status vlct_pipeline_set_seed(vlct_pipeline* p, uint64_t seed) {
  if (p == nullptr) return invalid("pipeline handle is null");
  return guarded([&] { p->config.override_seed(seed); });
}

vlct_status vlct_pipeline_set_out_dir(vlct_pipeline* p, const char* out_dir) {
  if (p == nullptr || out_dir == nullptr) return invalid("pipeline or out_dir is null");
  return guarded([&] { p->config.override_out_dir(out_dir); });
}

vlct_status vlct_pipeline_run(vlct_pipeline* p, const char* stage, int* executed) {
  if (p == nullptr || stage == nullptr) return invalid("pipeline or stage is null");
  return guarded([&] {
    vlct::pipeline::StageRunner runner(p->config);
    const bool ran = runner.run(stage);
    if (executed != nullptr) *executed = ran ? 1 : 0;
  });
}

vlct_status vlct_pipeline_config_hash(vlct_pipeline* p, char* buf, size_t buf_len) {
  if (p == nullptr || buf == nullptr) return invalid("pipeline or buffer is null");
  const std::string& h = p->config.hash();
  if (buf_len < h.size() + 1) return invalid("hash buffer too small (need 17 bytes)");
  std::memcpy(buf, h.c_str(), h.size() + 1);
  return VLCT_OK;
}

void vlct_pipeline_close(vlct_pipeline* p) { delete p; }

vlct_status vlct_labeler_open(const char* lexicon_path, vlct_labeler** out) {
  if (out == nullptr) return invalid("out pointer is null");
  *out = nullptr;
  return guarded([&] {
    auto lexicon = lexicon_path == nullptr ? vlct::reports::RuleLexicon::builtin()
                                           : vlct::reports::RuleLexicon::load(lexicon_path);
    *out = new vlct_labeler{std::move(lexicon)};
  });
}

vlct_status vlct_labeler_classify(vlct_labeler* l, const char* findings,
                                  const char* impression, int32_t* label_out) {
  if (l == nullptr || label_out == nullptr) return invalid("labeler or label_out is null");
  return guarded([&] {
    const auto doc = vlct::reports::ReportDoc::make(
        "capi", findings == nullptr ? "" : findings, impression == nullptr ? "" : impression);
    *label_out = static_cast<int32_t>(vlct::reports::rule_classify(doc, l->lexicon).label);
  });
}

void vlct_labeler_close(vlct_labeler* l) { delete l; }

vlct_status vlct_normalize_impression(const char* text, char* buf, size_t buf_len,
                                      size_t* needed) {
  if (text == nullptr || buf == nullptr || buf_len == 0) {
    return invalid("text or buffer is null/empty");
  }
  return guarded([&] {
    const std::string normalized = vlct::reports::normalize_impression(text);
    if (needed != nullptr) *needed = normalized.size();
    const size_t copy = std::min(buf_len - 1, normalized.size());
    std::memcpy(buf, normalized.data(), copy);
    buf[copy] = '\0';
    vlct::require(normalized.size() < buf_len, vlct::errc::invalid_config,
                  "buffer too small; output truncated");
  });
}

vlct_status vlct_consensus(const int32_t votes[3], int32_t* label_out,
                           int32_t* confidence_out) {
  if (votes == nullptr || label_out == nullptr || confidence_out == nullptr) {
    return invalid("votes/label_out/confidence_out is null");
  }
  return guarded([&] {
    std::vector<vlct::reports::TeacherVote> v;
    for (int i = 0; i < 3; ++i) {
      v.push_back({"teacher-" + std::to_string(i),
                   vlct::reports::activity_label_from_ordinal(votes[i])});
    }
    const auto result = vlct::reports::consensus(v);
    *label_out = result.label.has_value() ? static_cast<int32_t>(*result.label) : -1;
    *confidence_out = static_cast<int32_t>(result.confidence);
  });
}

vlct_status vlct_rouge_l_f1(const char* candidate, const char* reference, double* out) {
  if (candidate == nullptr || reference == nullptr || out == nullptr) {
    return invalid("candidate/reference/out is null");
  }
  return guarded([&] { *out = vlct::eval::rouge_l_f1(candidate, reference); });
}

vlct_status vlct_bleu_sentence(const char* candidate, const char* reference, double* out) {
  if (candidate == nullptr || reference == nullptr || out == nullptr) {
    return invalid("candidate/reference/out is null");
  }
  return guarded([&] { *out = vlct::eval::bleu_sentence(candidate, reference); });
}

vlct_status vlct_ordinal_chance(double p_normal, double p_possibly, double p_abnormal,
                                double* prevalence_within1, double* uniform_within1) {
  if (prevalence_within1 == nullptr || uniform_within1 == nullptr) {
    return invalid("output pointers are null");
  }
  return guarded([&] {
    const double sum = p_normal + p_possibly + p_abnormal;
    vlct::require(p_normal >= 0 && p_possibly >= 0 && p_abnormal >= 0 &&
                      std::abs(sum - 1.0) <= 1e-6,
                  vlct::errc::invalid_config, "distribution must be nonnegative and sum to 1");
    *prevalence_within1 = 1.0 - 2.0 * p_normal * p_abnormal;
    *uniform_within1 = 1.0 - (p_normal + p_abnormal) / 3.0;
  });
}

vlct_status vlct_multipositive_loss(const double* similarity, int32_t n,
                                    const int32_t* class_ids, double tau, double* out) {
  if (similarity == nullptr || class_ids == nullptr || out == nullptr) {
    return invalid("similarity/class_ids/out is null");
  }
  if (n < 1) return invalid("n must be >= 1");
  return guarded([&] {
    vlct::embed::Matrix s(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) s(i, j) = similarity[i * n + j];
    }
    vlct::train::PositiveSets positives;
    positives.sets.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (class_ids[j] == class_ids[i]) positives.sets[i].push_back(j);
      }
    }
    *out = vlct::train::multipositive_loss(s, positives, tau);
  });
}

}  // extern "C"
