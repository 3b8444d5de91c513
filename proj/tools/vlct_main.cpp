// vlct command line: runs pipeline stages against a run directory.
// Links only the C API of the shared library.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "vlct.h"

namespace {

int status_to_exit_code(vlct_status s) {
  switch (s) {
    case VLCT_OK: return 0;
    case VLCT_ERROR_VALIDATION: return 2;
    case VLCT_ERROR_MISSING_PREREQ: return 3;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CT enterography vision-language pipeline"};
  app.set_version_flag("--version", std::string(vlct_version()));

  std::string stage;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("stage", stage,
                 "Pipeline stage: synth, ingest, label, encode, train, eval-retrieval, "
                 "eval-classify, rag, gen-eval, all")
      ->required();
  app.add_option("--config", config_path, "Run config JSON (omit for built-in defaults)");
  app.add_option("--seed", seed, "Override the run seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--out", out_dir, "Override the output directory");

  CLI11_PARSE(app, argc, argv);

  vlct_pipeline* pipeline = nullptr;
  vlct_status status =
      vlct_pipeline_open(config_path.empty() ? nullptr : config_path.c_str(), &pipeline);
  if (status != VLCT_OK) {
    std::fprintf(stderr, "vlct: %s\n", vlct_last_error());
    return status_to_exit_code(status);
  }

  if (seed_set) status = vlct_pipeline_set_seed(pipeline, seed);
  if (status == VLCT_OK && !out_dir.empty()) {
    status = vlct_pipeline_set_out_dir(pipeline, out_dir.c_str());
  }
  if (status == VLCT_OK) {
    int executed = 0;
    status = vlct_pipeline_run(pipeline, stage.c_str(), &executed);
  }
  if (status != VLCT_OK) std::fprintf(stderr, "vlct: %s\n", vlct_last_error());

  vlct_pipeline_close(pipeline);
  return status_to_exit_code(status);
}
