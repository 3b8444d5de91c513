#pragma once

#include <string>
#include <vector>

#include "pipeline/run_config.hpp"

namespace vlct::pipeline {

/// Executes pipeline stages against a run directory. Stage outputs are keyed
/// by the config hash: a completed stage with a matching hash is a cached
/// no-op, a prerequisite with a different hash raises ConfigHashMismatch, and
/// a missing prerequisite raises MissingPrerequisite.
class StageRunner {
 public:
  explicit StageRunner(RunConfig config);

  static const std::vector<std::string>& stage_names();  // includes synth and all

  /// Returns true when the stage executed, false when cached.
  bool run(const std::string& stage);

 private:
  bool run_one(const std::string& stage);
  void run_synth();
  void run_ingest();
  void run_label();
  void run_encode();
  void run_train();
  void run_eval_retrieval();
  void run_eval_classify();
  void run_rag();
  void run_gen_eval();
  void write_consolidated_report();

  std::filesystem::path stage_dir(const std::string& stage) const;
  bool stage_cached(const std::string& stage) const;
  void mark_complete(const std::string& stage);
  void require_stage(const std::string& stage) const;

  RunConfig cfg_;
};

}  // namespace vlct::pipeline
