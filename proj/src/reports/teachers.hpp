#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reports/consensus.hpp"
#include "reports/lexicon.hpp"
#include "reports/report_types.hpp"

namespace vlct::reports {

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = 16;
};

/// Minimal chat-completion client. Implementations throw
/// Error(teacher_unavailable) on transport failures.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct HttpEndpoint {
  std::string base_url;  // e.g. http://localhost:8000
  std::string model;
  std::string api_key;      // optional bearer token
  double timeout_s = 30.0;
  std::string audit_log;    // optional path; bodies logged with auth redacted
};

std::unique_ptr<ChatClient> make_http_chat_client(const HttpEndpoint& endpoint);

/// The fixed few-shot instruction block sent to every LLM teacher.
const std::string& teacher_prompt_template();

/// Renders the prompt for one report (findings + impression appended).
std::string render_teacher_prompt(const ReportDoc& doc);

struct TeacherDescriptor {
  std::string name;
  std::shared_ptr<ChatClient> client;
};

/// Sends the fixed prompt at temperature 0 and parses the reply keyword.
ActivityLabel teacher_vote(const ReportDoc& doc, const TeacherDescriptor& teacher);

/// One teacher's worth of votes for a batch of reports. `nullopt` marks a
/// report whose vote ultimately failed after retries.
struct BatchVoteOptions {
  int max_concurrency = 4;
  int max_retries = 2;  // retries after the first attempt, transport errors only
};

using VoteFn = std::function<ActivityLabel(const ReportDoc&)>;

/// Bounded-concurrency fan-out of `vote` over `docs`; results keep input
/// order. Each task retries transport failures up to max_retries times.
std::vector<std::optional<ActivityLabel>> gather_votes(const std::vector<ReportDoc>& docs,
                                                       const VoteFn& vote,
                                                       const BatchVoteOptions& options);

}  // namespace vlct::reports
