/*
 * vlct - CT enterography vision-language pipeline, C API.
 *
 * The shared library wraps the C++ core behind opaque handles and status
 * codes. Every function returns VLCT_OK on success; on failure,
 * vlct_last_error() describes what went wrong (thread-local).
 */
#ifndef VLCT_H
#define VLCT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vlct_status {
  VLCT_OK = 0,
  VLCT_ERROR = 1,                 /* internal failure */
  VLCT_ERROR_VALIDATION = 2,      /* bad arguments, config, or input data */
  VLCT_ERROR_MISSING_PREREQ = 3,  /* stage prerequisite missing or stale */
  VLCT_ERROR_IO = 4,              /* filesystem failure */
  VLCT_ERROR_UNAVAILABLE = 5      /* external service unreachable */
} vlct_status;

const char* vlct_version(void);

/* Message for the most recent failing call on this thread. Never NULL. */
const char* vlct_last_error(void);

/* ---- pipeline runs ---------------------------------------------------- */

typedef struct vlct_pipeline vlct_pipeline;

/* Opens a run from a JSON config file. Pass NULL for built-in defaults. */
vlct_status vlct_pipeline_open(const char* config_path, vlct_pipeline** out);
vlct_status vlct_pipeline_open_json(const char* config_json, vlct_pipeline** out);

/* Overrides applied before the first stage runs; both affect the run hash. */
vlct_status vlct_pipeline_set_seed(vlct_pipeline* p, uint64_t seed);
vlct_status vlct_pipeline_set_out_dir(vlct_pipeline* p, const char* out_dir);

/* Stage is one of: synth, ingest, label, encode, train, eval-retrieval,
 * eval-classify, rag, gen-eval, all. `executed` (optional) reports whether
 * work ran (1) or a cached artifact was reused (0). */
vlct_status vlct_pipeline_run(vlct_pipeline* p, const char* stage, int* executed);

/* Hex config hash of the run; buffer should hold >= 17 bytes. */
vlct_status vlct_pipeline_config_hash(vlct_pipeline* p, char* buf, size_t buf_len);

void vlct_pipeline_close(vlct_pipeline* p);

/* ---- report labeling --------------------------------------------------- */

/* Labels: 0 normal, 1 possibly abnormal, 2 abnormal; -1 = abstain. */
/* Confidence: 0 abstain, 1 medium, 2 high. */

typedef struct vlct_labeler vlct_labeler;

/* Pass NULL to use the built-in lexicon. */
vlct_status vlct_labeler_open(const char* lexicon_path, vlct_labeler** out);
vlct_status vlct_labeler_classify(vlct_labeler* l, const char* findings,
                                  const char* impression, int32_t* label_out);
void vlct_labeler_close(vlct_labeler* l);

/* Writes the normalized impression into buf (NUL-terminated). `needed`
 * receives the full length (excluding NUL) and may exceed buf_len, in which
 * case the text is truncated and VLCT_ERROR_VALIDATION is returned. */
vlct_status vlct_normalize_impression(const char* text, char* buf, size_t buf_len,
                                      size_t* needed);

/* Majority vote over exactly three labels. */
vlct_status vlct_consensus(const int32_t votes[3], int32_t* label_out,
                           int32_t* confidence_out);

/* ---- metrics ----------------------------------------------------------- */

vlct_status vlct_rouge_l_f1(const char* candidate, const char* reference, double* out);
vlct_status vlct_bleu_sentence(const char* candidate, const char* reference, double* out);

/* Within-1 chance baselines for a three-class distribution (must sum to 1). */
vlct_status vlct_ordinal_chance(double p_normal, double p_possibly, double p_abnormal,
                                double* prevalence_within1, double* uniform_within1);

/* Multi-positive contrastive loss over an n x n row-major similarity matrix.
 * class_ids assigns each index its duplicate class; indices sharing a class
 * are mutual positives. */
vlct_status vlct_multipositive_loss(const double* similarity, int32_t n,
                                    const int32_t* class_ids, double tau, double* out);

#ifdef __cplusplus
}
#endif

#endif /* VLCT_H */
