#include "reports/teachers.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "common/strutil.hpp"

namespace vlct::reports {

namespace {

class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpEndpoint endpoint) : ep_(std::move(endpoint)) {
    require(starts_with(ep_.base_url, "http://"), errc::invalid_config,
            "chat endpoint must be an http:// URL (TLS is not built in)");
  }

  std::string complete(const ChatRequest& request) override {
    json body = {
        {"model", ep_.model},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
        {"messages", json::array()},
    };
    if (!request.system.empty()) {
      body["messages"].push_back({{"role", "system"}, {"content", request.system}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", request.user}});

    httplib::Client cli(ep_.base_url);
    cli.set_connection_timeout(std::chrono::milliseconds(static_cast<int>(ep_.timeout_s * 1000)));
    cli.set_read_timeout(std::chrono::milliseconds(static_cast<int>(ep_.timeout_s * 1000)));
    httplib::Headers headers;
    if (!ep_.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep_.api_key);

    auto res = cli.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      audit(body, json{{"error", httplib::to_string(res.error())}});
      fail(errc::teacher_unavailable, "chat endpoint unreachable: " + ep_.base_url);
    }
    audit(body, json{{"status", res->status}, {"body", res->body}});
    if (res->status != 200) {
      fail(errc::teacher_unavailable,
           "chat endpoint returned status " + std::to_string(res->status));
    }
    try {
      const json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      fail(errc::teacher_unavailable, std::string("malformed chat response: ") + e.what());
    }
  }

 private:
  void audit(const json& request_body, const json& response) {
    if (ep_.audit_log.empty()) return;
    json record = {{"endpoint", ep_.base_url},
                   {"model", ep_.model},
                   {"request", request_body},
                   {"response", response}};
    // the api key never enters the record; nothing else is secret
    std::lock_guard<std::mutex> lock(audit_mutex_);
    std::ofstream out(ep_.audit_log, std::ios::app);
    if (out.good()) out << record.dump() << '\n';
  }

  HttpEndpoint ep_;
  std::mutex audit_mutex_;
};

}  // namespace

std::unique_ptr<ChatClient> make_http_chat_client(const HttpEndpoint& endpoint) {
  return std::make_unique<HttpChatClient>(endpoint);
}

const std::string& teacher_prompt_template() {
  static const std::string prompt =
      "You classify radiology report text for inflammatory bowel disease activity.\n"
      "Use exactly one of these categories:\n"
      "- normal: no clinically meaningful abnormality.\n"
      "- possibly abnormal: uncertain or hedged findings, limited study quality, or "
      "historical findings only.\n"
      "- abnormal: definite active disease such as inflammation, infection, obstruction, "
      "perforation, abscess, or fistula.\n"
      "Reply with the category name only.\n"
      "\n"
      "Examples:\n"
      "Report: Impression: No evidence of active inflammatory bowel disease.\n"
      "Answer: normal\n"
      "Report: Impression: Findings may represent early ileitis; cannot exclude Crohn disease.\n"
      "Answer: possibly abnormal\n"
      "Report: Impression: Active terminal ileitis with intra-abdominal abscess.\n"
      "Answer: abnormal\n";
  return prompt;
}

std::string render_teacher_prompt(const ReportDoc& doc) {
  std::string out = teacher_prompt_template();
  out += "\nReport: Findings: " + doc.findings + "\nImpression: " + doc.impression + "\nAnswer:";
  return out;
}

ActivityLabel teacher_vote(const ReportDoc& doc, const TeacherDescriptor& teacher) {
  require(teacher.client != nullptr, errc::invalid_config,
          "teacher '" + teacher.name + "' has no client configured");
  ChatRequest req;
  req.user = render_teacher_prompt(doc);
  req.temperature = 0.0;
  return parse_vote_reply(teacher.client->complete(req));
}

std::vector<std::optional<ActivityLabel>> gather_votes(const std::vector<ReportDoc>& docs,
                                                       const VoteFn& vote,
                                                       const BatchVoteOptions& options) {
  std::vector<std::optional<ActivityLabel>> results(docs.size());
  if (docs.empty()) return results;

  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(options.max_concurrency,
                                                static_cast<int>(docs.size())));
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= docs.size()) return;
      for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        try {
          results[i] = vote(docs[i]);
          break;
        } catch (const Error& e) {
          if (e.code() != errc::teacher_unavailable || attempt == options.max_retries) break;
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  return results;
}

}  // namespace vlct::reports
