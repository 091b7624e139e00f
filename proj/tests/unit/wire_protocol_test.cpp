#include <gtest/gtest.h>

#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "metabandit/agent_protocol.hpp"
#include "metabandit/errors.hpp"
#include "metabandit/trajectory_io.hpp"

using namespace metabandit;

namespace {

SummaryState worked_state() { return SummaryState({1, 2, 7, 3, 7}, {-0.249, 0.281, 0.790, 0.279, 1.015}); }

AgentRequest request_for(const SummaryState& s, std::uint64_t episode, std::size_t step) {
  AgentRequest r;
  r.episode_id = episode;
  r.step = step;
  r.k = s.k();
  r.prompt = render_prompt(s, s.k()).text;
  r.state = s;
  return r;
}

// Fixed-text agent written in shell.
std::string echo_agent(const std::string& text) {
  const std::string record = nlohmann::json{{"text", text}}.dump();
  return "cmd:while read line; do printf '%s\\n' '" + record + "'; done";
}

std::string serialize(const Trajectory& t) {
  std::ostringstream ss;
  write_trajectory(ss, t);
  return ss.str();
}

}  // namespace

TEST(WireRecords, RequestRoundTrip) {
  const auto s = SummaryState({0, 3, 1}, {0.0, 0.125, -2.5});
  const auto line = encode_request(request_for(s, 77, 5));
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto j = nlohmann::json::parse(line);
  EXPECT_TRUE(j.at("state").at("means")[0].is_null());
  EXPECT_EQ(j.at("k"), 3);
  const auto back = decode_request(line);
  EXPECT_EQ(back.episode_id, 77u);
  EXPECT_EQ(back.step, 5u);
  EXPECT_EQ(back.state, s);
  EXPECT_EQ(back.prompt, render_prompt(s, 3).text);
}

TEST(WireRecords, MalformedRequestsAreProtocolErrors) {
  for (const char* bad : {"", "{", "[]", R"({"episode_id":1})",
                          R"({"episode_id":1,"step":1,"k":2,"state":{"pulls":[1],"means":[0.5]}})",
                          R"({"episode_id":1,"step":1,"k":1,"state":{"pulls":[1],"means":[null]}})",
                          R"({"episode_id":"x","step":1,"k":1,"state":{"pulls":[0],"means":[null]}})"}) {
    EXPECT_THROW(decode_request(bad), ProtocolError) << bad;
  }
}

TEST(WireRecords, ResponsesAndErrors) {
  EXPECT_EQ(decode_response(encode_response("hi\nthere")), "hi\nthere");
  EXPECT_THROW(decode_response(encode_error("nope")), ProtocolError);
  EXPECT_THROW(decode_response("garbage"), ProtocolError);
}

TEST(ServeStream, AnswersEachLineAndSurvivesGarbage) {
  const ScriptedAgent agent(parse_policy_spec("ucb:C=0.5"), nullptr);
  std::istringstream in("not json\n" + encode_request(request_for(worked_state(), 0, 21)) + "\n\n{\"k\":1}\n");
  std::ostringstream out;
  serve_stream(agent, in, out);
  std::istringstream lines(out.str());
  std::string l1, l2, l3, extra;
  ASSERT_TRUE(std::getline(lines, l1));
  ASSERT_TRUE(std::getline(lines, l2));
  ASSERT_TRUE(std::getline(lines, l3));
  EXPECT_FALSE(std::getline(lines, extra));
  EXPECT_TRUE(nlohmann::json::parse(l1).contains("error"));
  EXPECT_EQ(parse_response(decode_response(l2), 5).arm, 4u);
  EXPECT_TRUE(nlohmann::json::parse(l3).contains("error"));
}

TEST(Endpoint, Parsing) {
  const auto cmd = parse_agent_endpoint("cmd:python3 agent.py --x");
  EXPECT_EQ(cmd.kind, AgentEndpoint::Kind::Command);
  EXPECT_EQ(cmd.command, "python3 agent.py --x");
  const auto h1 = parse_agent_endpoint("http:127.0.0.1:8080");
  EXPECT_EQ(h1.kind, AgentEndpoint::Kind::Http);
  EXPECT_EQ(h1.path, "/act");
  const auto h2 = parse_agent_endpoint("http:http://localhost:9/v1/act");
  EXPECT_EQ(h2.path, "/v1/act");
  EXPECT_THROW(parse_agent_endpoint("tcp:1.2.3.4:5"), ParseError);
  EXPECT_THROW(parse_agent_endpoint("cmd:"), ParseError);
}

TEST(PipeTransport, EchoAgentPicksArmZeroEveryStep) {
  EpisodeConfig cfg;
  cfg.env = parse_family_spec("Gaussian3_Var1_MeanN0");
  cfg.horizon = 12;
  AgentDecider agent(std::make_unique<AgentClient>(parse_agent_endpoint(echo_agent("<think>fixed</think><answer>Arm 0</answer>"))),
                     "echo");
  const auto traj = run_episode(agent, cfg);
  ASSERT_FALSE(traj.failure.has_value()) << *traj.failure;
  ASSERT_EQ(traj.transitions.size(), 12u);
  for (const auto& tr : traj.transitions) EXPECT_EQ(tr.action, 0u);
}

TEST(PipeTransport, MalformedAgentTextEngagesShaping) {
  EpisodeConfig cfg;
  cfg.env = parse_family_spec("Gaussian3_Var1_MeanN0");
  cfg.horizon = 4;
  AgentDecider agent(std::make_unique<AgentClient>(parse_agent_endpoint(echo_agent("<answer>Arm 0</answer>"))), "bare");
  const auto traj = run_episode(agent, cfg);
  ASSERT_EQ(traj.transitions.size(), 4u);
  for (const auto& tr : traj.transitions) {
    EXPECT_FALSE(tr.valid);
    EXPECT_EQ(tr.shaped_value(RewardScheme::Og).value(), -0.5);
  }
}

TEST(PipeTransport, TimeoutAfterRetriesIsAnEpisodeFailure) {
  EpisodeConfig cfg;
  cfg.env = parse_family_spec("Gaussian3_Var1_MeanN0");
  cfg.horizon = 4;
  RetryPolicy retry{2, std::chrono::milliseconds(150)};
  AgentDecider agent(std::make_unique<AgentClient>(parse_agent_endpoint("cmd:sleep 5"), retry), "sleepy");
  const auto traj = run_episode(agent, cfg);
  EXPECT_TRUE(traj.transitions.empty());
  ASSERT_TRUE(traj.failure.has_value());

  AgentClient dead(parse_agent_endpoint("cmd:exit 0"), retry);
  EXPECT_THROW(dead.call(request_for(worked_state(), 0, 1)), TransportError);
}

TEST(HttpServer, ServedScriptedPolicyMatchesInProcess) {
  EpisodeConfig cfg;
  cfg.env = parse_family_spec("Gaussian5_Var1_MeanN0");
  cfg.horizon = 40;
  cfg.seed = 12;
  const ScriptedAgent served(parse_policy_spec("ts"), &cfg.env);
  HttpAgentServer server(served);
  const int port = server.bind("127.0.0.1", 0);
  std::thread loop([&] { server.serve(); });

  AgentDecider remote(std::make_unique<AgentClient>(parse_agent_endpoint("http:127.0.0.1:" + std::to_string(port))),
                      "ts");
  PolicyDecider local(parse_policy_spec("ts"), &cfg.env);
  const auto a = run_episode(remote, cfg);
  const auto b = run_episode(local, cfg);
  server.stop();
  loop.join();
  ASSERT_FALSE(a.failure.has_value()) << *a.failure;
  EXPECT_EQ(serialize(a), serialize(b));
}

TEST(HttpServer, RejectsMalformedRequestsWith400) {
  const ScriptedAgent agent(parse_policy_spec("greedy"), nullptr);
  HttpAgentServer server(agent);
  const int port = server.bind("127.0.0.1", 0);
  std::thread loop([&] { server.serve(); });

  AgentClient client(parse_agent_endpoint("http:127.0.0.1:" + std::to_string(port)), RetryPolicy{1, std::chrono::milliseconds(2000)});
  const auto ok = client.call(request_for(worked_state(), 1, 1));
  EXPECT_TRUE(ok.valid);
  EXPECT_EQ(ok.arm, 4u);
  AgentRequest broken = request_for(worked_state(), 1, 1);
  broken.k = 3;  // disagrees with the state
  EXPECT_THROW(client.call(broken), TransportError);
  // The server is still up.
  EXPECT_TRUE(client.call(request_for(worked_state(), 1, 2)).valid);
  server.stop();
  loop.join();
}
