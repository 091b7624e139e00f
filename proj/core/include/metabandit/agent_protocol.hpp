#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "metabandit/policies.hpp"
#include "metabandit/rollout.hpp"

namespace metabandit {

// ---------------------------------------------------------------------------
// Prompt and response text
// ---------------------------------------------------------------------------

struct PromptText {
  std::string text;
};

/// The task instruction followed by one statistics line per arm, e.g.
///   Arm 2: 7 pulls, avg. reward 0.790
/// An unpulled arm renders as "Arm 3: 0 pulls, no reward yet".
PromptText render_prompt(const SummaryState& state, std::size_t k);

struct AgentResponse {
  std::string raw_text;
  std::optional<std::string> rationale;
  std::optional<std::size_t> arm;
  bool valid = false;
};

/// Extracts the arm from the last <answer>...</answer> span ("Arm 4",
/// "arm 4", "The arm to pull is Arm 4.", or a bare "4") and the rationale from
/// the <think> span (or, without think tags, the text before the answer).
/// Valid iff the arm is in [0, k) and the rationale is non-empty. Never
/// throws on arbitrary input.
AgentResponse parse_response(std::string_view raw, std::size_t k);

// ---------------------------------------------------------------------------
// Scripted agents
// ---------------------------------------------------------------------------

/// Wraps a policy as an agent that explains its computation in a templated
/// chain of thought and answers in tags. Parsing its output always yields the
/// policy's own decision.
class ScriptedAgent {
 public:
  ScriptedAgent(PolicySpec spec, const EnvFamilySpec* env);

  const Policy& policy() const noexcept { return policy_; }
  PolicyDecision decide(const SummaryState& state, std::uint64_t episode_id, std::size_t step) const;
  std::string respond(const SummaryState& state, std::uint64_t episode_id, std::size_t step) const;

 private:
  Policy policy_;
};

/// How the exploration constant is spelled in rationales ("1/2" for 0.5).
std::string format_constant(double c);

// ---------------------------------------------------------------------------
// Wire protocol
// ---------------------------------------------------------------------------

/// One decision request. Encoded as a single JSON line
///   {"episode_id", "step", "k", "prompt", "state": {"pulls", "means"}}
/// `means` holds null for unpulled arms. The response line is {"text"}; a
/// server that rejects a request answers {"error"}.
struct AgentRequest {
  std::uint64_t episode_id = 0;
  std::size_t step = 1;
  std::size_t k = 0;
  std::string prompt;
  SummaryState state{1};
};

std::string encode_request(const AgentRequest& request);
/// Throws ProtocolError.
AgentRequest decode_request(std::string_view line);
std::string encode_response(std::string_view text);
std::string encode_error(std::string_view message);
/// Returns the text, or throws ProtocolError for an error record or garbage.
std::string decode_response(std::string_view line);

/// Server side: decode, answer with `agent`, encode. Malformed input yields
/// an error record rather than an exception.
std::string handle_request_line(const ScriptedAgent& agent, std::string_view line);

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

struct AgentEndpoint {
  enum class Kind { Command, Http } kind = Kind::Command;
  std::string command;  // run through /bin/sh -c
  std::string host;     // scheme://host:port
  std::string path = "/act";
};

/// `cmd:<command line>` or `http:<url>` where url is `host:port[/path]` or
/// `http://host:port[/path]`.
AgentEndpoint parse_agent_endpoint(std::string_view text);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds timeout{30000};
};

class AgentTransport {
 public:
  virtual ~AgentTransport() = default;
  /// Sends one request line, returns one response line. Throws TransportError.
  virtual std::string exchange(const std::string& request_line) = 0;
  /// Drops any connection state so the next exchange starts fresh.
  virtual void reset() = 0;
};

std::unique_ptr<AgentTransport> make_transport(const AgentEndpoint& endpoint, const RetryPolicy& retry);

/// Sends a prompt plus structured state and parses the reply locally.
class AgentClient {
 public:
  AgentClient(AgentEndpoint endpoint, RetryPolicy retry = {});
  explicit AgentClient(std::unique_ptr<AgentTransport> transport, RetryPolicy retry = {});

  /// Throws TransportError once every attempt has failed.
  AgentResponse call(const AgentRequest& request);

 private:
  std::unique_ptr<AgentTransport> transport_;
  RetryPolicy retry_;
};

/// Decider backed by an external agent. Transport failure after retries is
/// reported as StepChoice::failure, which ends the episode.
class AgentDecider final : public Decider {
 public:
  AgentDecider(std::unique_ptr<AgentClient> client, std::string label);
  StepChoice choose(const SummaryState& state, const StepContext& ctx) override;
  std::string label() const override { return label_; }

 private:
  std::unique_ptr<AgentClient> client_;
  std::string label_;
};

/// In-process scripted agent behind the Decider interface; goes through
/// render/parse exactly like a remote one.
class ScriptedAgentDecider final : public Decider {
 public:
  ScriptedAgentDecider(PolicySpec spec, const EnvFamilySpec* env);
  StepChoice choose(const SummaryState& state, const StepContext& ctx) override;
  std::string label() const override;

 private:
  ScriptedAgent agent_;
};

}  // namespace metabandit

#include <iosfwd>

namespace metabandit {

// ---------------------------------------------------------------------------
// Serving a scripted agent
// ---------------------------------------------------------------------------

/// Answers newline-delimited requests from `in` on `out` until EOF.
void serve_stream(const ScriptedAgent& agent, std::istream& in, std::ostream& out);

/// HTTP mode: POST /act with a request record, reply with a response record.
class HttpAgentServer {
 public:
  explicit HttpAgentServer(const ScriptedAgent& agent);
  ~HttpAgentServer();
  HttpAgentServer(const HttpAgentServer&) = delete;
  HttpAgentServer& operator=(const HttpAgentServer&) = delete;

  /// Binds `host:port`; port 0 picks a free port. Returns the bound port.
  /// Throws TransportError on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace metabandit
