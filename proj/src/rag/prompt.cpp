#include "rag/prompt.hpp"

#include "common/error.hpp"

namespace vlct::rag {

std::string escape_example(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_example(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\' || i + 1 == text.size()) {
      out.push_back(text[i]);
      continue;
    }
    ++i;
    switch (text[i]) {
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default: out.push_back(text[i]);
    }
  }
  return out;
}

GenerationPrompt assemble_prompt(const std::vector<std::string>& retrieved_impressions,
                                 const PromptContext& context) {
  require(!retrieved_impressions.empty(), errc::empty_input,
          "prompt assembly needs at least one retrieved impression");

  GenerationPrompt p;
  p.system = "You are an expert abdominal radiologist.";

  std::string user;
  user += "Impressions from the most similar prior CT enterography studies:\n";
  for (std::size_t i = 0; i < retrieved_impressions.size(); ++i) {
    user += std::to_string(i + 1) + ". \"" + escape_example(retrieved_impressions[i]) + "\"\n";
  }
  user += "\nWrite the impression section for the current study";
  if (!context.study_id.empty()) user += " (" + context.study_id + ")";
  user += ".\n";
  user += "Do not copy the examples above; use them only as context.\n";
  user += "Write " + std::to_string(context.min_sentences) + "-" +
          std::to_string(context.max_sentences) +
          " sentences focusing on inflammatory bowel disease activity assessment.\n";
  p.user = user;
  return p;
}

}  // namespace vlct::rag
