#include "rag/generate.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "common/strutil.hpp"

namespace vlct::rag {

void GenerationParams::validate() const {
  require(max_new_tokens > min_new_tokens && min_new_tokens > 0, errc::invalid_config,
          "token limits must satisfy max_new > min_new > 0");
}

namespace {

constexpr int kMinChars = 30;

bool acceptable(const std::string& text) {
  return text.size() >= kMinChars && count_sentences(text) >= 1;
}

class HttpGenerationClient : public GenerationClient {
 public:
  explicit HttpGenerationClient(GenerationEndpoint endpoint) : ep_(std::move(endpoint)) {
    require(starts_with(ep_.base_url, "http://"), errc::invalid_config,
            "generation endpoint must be an http:// URL (TLS is not built in)");
  }

  std::vector<std::string> generate(const GenerationRequest& request, int n) override {
    request.params.validate();
    std::vector<std::string> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(complete_once(request));
    return out;
  }

 private:
  std::string complete_once(const GenerationRequest& request) {
    json user_content;
    if (request.montage_png_base64) {
      user_content = json::array(
          {{{"type", "text"}, {"text", request.prompt.user}},
           {{"type", "image_url"},
            {"image_url",
             {{"url", "data:image/png;base64," + *request.montage_png_base64}}}}});
    } else {
      user_content = request.prompt.user;
    }
    const json body = {
        {"model", ep_.model},
        {"temperature", request.params.temperature},
        {"top_p", request.params.top_p},
        {"max_tokens", request.params.max_new_tokens},
        {"messages",
         json::array({{{"role", "system"}, {"content", request.prompt.system}},
                      {{"role", "user"}, {"content", user_content}}})},
    };

    httplib::Client cli(ep_.base_url);
    cli.set_connection_timeout(std::chrono::milliseconds(static_cast<int>(ep_.timeout_s * 1000)));
    cli.set_read_timeout(std::chrono::milliseconds(static_cast<int>(ep_.timeout_s * 1000)));
    httplib::Headers headers;
    if (!ep_.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep_.api_key);

    auto res = cli.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) fail(errc::generation_unavailable, "generation endpoint unreachable");
    if (res->status != 200) {
      fail(errc::generation_unavailable,
           "generation endpoint returned status " + std::to_string(res->status));
    }
    try {
      return json::parse(res->body).at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const json::exception& e) {
      fail(errc::generation_unavailable, std::string("malformed generation response: ") + e.what());
    }
  }

  GenerationEndpoint ep_;
};

}  // namespace

std::unique_ptr<GenerationClient> make_http_generation_client(const GenerationEndpoint& endpoint) {
  return std::make_unique<HttpGenerationClient>(endpoint);
}

std::vector<std::string> RetrievalEchoClient::generate(const GenerationRequest& request, int n) {
  require(!candidates_.empty(), errc::generation_unavailable,
          "echo client has no retrieved candidates");
  (void)request;
  std::vector<std::string> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(candidates_[i % candidates_.size()]);
  return out;
}

int count_sentences(const std::string& text) {
  int count = 0;
  bool in_sentence = false;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?') {
      if (in_sentence) ++count;
      in_sentence = false;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      in_sentence = true;
    }
  }
  return count;
}

GenerationResult generate_with_filter(const GenerationRequest& request,
                                      GenerationClient& client) {
  request.params.validate();
  require(request.best_of >= 1 && request.max_retries >= 0, errc::invalid_config,
          "best_of must be >= 1 and max_retries >= 0");

  struct Seen {
    std::string text;
    int sentences;
  };
  std::vector<Seen> all_seen;

  GenerationResult result;
  const int rounds = 1 + request.max_retries;
  for (int round = 0; round < rounds; ++round) {
    const std::vector<std::string> candidates = client.generate(request, request.best_of);
    result.rounds = round + 1;

    int best = -1, best_sentences = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const int s = count_sentences(candidates[i]);
      all_seen.push_back({candidates[i], s});
      if (!acceptable(candidates[i])) continue;
      if (s > best_sentences) {  // strict: ties keep the earlier candidate
        best = static_cast<int>(i);
        best_sentences = s;
      }
    }
    if (best >= 0) {
      result.text = candidates[best];
      result.degraded = false;
      return result;
    }
  }

  // exhausted: least-bad candidate by (sentences, length), earliest on ties
  require(!all_seen.empty(), errc::generation_unavailable, "no candidates produced");
  int best = 0;
  for (std::size_t i = 1; i < all_seen.size(); ++i) {
    const Seen& a = all_seen[i];
    const Seen& b = all_seen[best];
    if (a.sentences > b.sentences ||
        (a.sentences == b.sentences && a.text.size() > b.text.size())) {
      best = static_cast<int>(i);
    }
  }
  result.text = all_seen[best].text;
  result.degraded = true;
  return result;
}

}  // namespace vlct::rag
