#pragma once

#include <string>
#include <vector>

namespace vlct::rag {

/// Escapes an impression for embedding in the prompt template: backslash,
/// double quote, and newlines are backslash-escaped so the numbered example
/// lines stay parseable.
std::string escape_example(const std::string& text);
std::string unescape_example(const std::string& text);

struct PromptContext {
  std::string study_id;
  int min_sentences = 3;
  int max_sentences = 5;
};

/// Deterministic generation prompt: expert-radiologist system role, numbered
/// retrieved examples, the no-copy instruction, and the sentence-count
/// constraint.
struct GenerationPrompt {
  std::string system;
  std::string user;
};

GenerationPrompt assemble_prompt(const std::vector<std::string>& retrieved_impressions,
                                 const PromptContext& context);

}  // namespace vlct::rag
