#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rag/prompt.hpp"

namespace vlct::rag {

struct GenerationParams {
  int max_new_tokens = 240;
  int min_new_tokens = 48;
  double temperature = 0.6;
  double top_p = 0.9;
  double repetition_penalty = 1.08;
  int no_repeat_ngram = 3;
  void validate() const;
};

struct GenerationRequest {
  GenerationPrompt prompt;
  GenerationParams params;
  int best_of = 4;
  int max_retries = 3;  // extra rounds after the first when every candidate is rejected
  std::optional<std::string> montage_png_base64;  // multimodal payload when supported
};

/// Produces n candidate completions for a request. Throws
/// Error(generation_unavailable) on transport failures.
class GenerationClient {
 public:
  virtual ~GenerationClient() = default;
  virtual std::vector<std::string> generate(const GenerationRequest& request, int n) = 0;
};

struct GenerationEndpoint {
  std::string base_url;
  std::string model;
  std::string api_key;
  double timeout_s = 120.0;
};

/// Chat-completion HTTP client. The montage, when present, is attached as a
/// base64 image content part; callers that know the endpoint is text-only
/// should leave it unset.
std::unique_ptr<GenerationClient> make_http_generation_client(const GenerationEndpoint& endpoint);

/// Candidates are the retrieved impressions themselves (set per study); a
/// deterministic stand-in for an external generator in hermetic runs.
class RetrievalEchoClient : public GenerationClient {
 public:
  void set_candidates(std::vector<std::string> candidates) { candidates_ = std::move(candidates); }
  std::vector<std::string> generate(const GenerationRequest& request, int n) override;

 private:
  std::vector<std::string> candidates_;
};

/// Number of complete sentences: maximal nonblank segments ending in . ! or ?
int count_sentences(const std::string& text);

struct GenerationResult {
  std::string text;
  bool degraded = false;  // quality filter exhausted every retry round
  int rounds = 0;         // client rounds performed
};

/// Best-of-N with quality filtering: candidates under 30 characters or
/// without a complete sentence are rejected; among survivors the one with the
/// most sentences wins (ties toward earlier candidates). When a round rejects
/// everything the whole round retries, up to max_retries extra rounds; after
/// the last failure the least-bad candidate seen is returned flagged degraded.
GenerationResult generate_with_filter(const GenerationRequest& request, GenerationClient& client);

}  // namespace vlct::rag
