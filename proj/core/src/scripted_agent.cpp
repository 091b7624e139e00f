#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "metabandit/agent_protocol.hpp"
#include "metabandit/errors.hpp"
#include "metabandit/text_format.hpp"

namespace metabandit {

using nlohmann::json;

namespace {

std::string arm_list_sum(const SummaryState& state) {
  std::string out = "(";
  for (std::size_t a = 0; a < state.k(); ++a) {
    if (a > 0) out += " + ";
    out += std::to_string(state.pulls(a));
  }
  return out + ")";
}

std::string count_label(std::uint64_t n) {
  return std::to_string(n) + (n == 1 ? " pull" : " pulls");
}

std::string answer_block(std::size_t arm) {
  return "<answer>Arm " + std::to_string(arm) + "</answer>";
}

std::string first_unpulled_note(std::size_t arm) {
  return "Arm " + std::to_string(arm) + " has not been pulled yet, so its value is unbounded and I choose arm " +
         std::to_string(arm) + ".";
}

// UCB and its two variants share one layout; only the bonus line differs.
std::string ucb_family_rationale(const SummaryState& state, const PolicySpec& spec, const PolicyDecision& d) {
  std::string text;
  const auto t = state.total_pulls();
  if (spec.kind == PolicyKind::Ucb) {
    text = "Let me calculate the UCB value for each arm after " + arm_list_sum(state) + " = " + std::to_string(t) +
           " pulls:\n\n";
  } else {
    text = "Let me calculate the UCB value for each arm from its own pull count:\n\n";
  }
  const std::string c = format_constant(spec.c);
  for (std::size_t a = 0; a < state.k(); ++a) {
    const auto n = state.pulls(a);
    text += "Arm " + std::to_string(a) + ": ";
    if (n == 0) {
      text += "0 pulls, so the uncertainty bonus is unbounded; UCB = infinity\n";
      continue;
    }
    const double nd = static_cast<double>(n);
    const double q = state.mean_values()[a];
    const std::string ns = std::to_string(n);
    double bonus = 0.0;
    switch (spec.kind) {
      case PolicyKind::Ucb: {
        const double log_t = std::log(static_cast<double>(t));
        bonus = std::sqrt(log_t / nd);
        text += "Uncertainty bonus = √(ln(" + std::to_string(t) + ") / " + ns + ") ≈ √(" + fixed3(log_t) +
                " / " + ns + ") ≈ " + fixed3(bonus);
        break;
      }
      case PolicyKind::UcbVarLog: {
        const double log_n = std::log(nd + 1.0);
        bonus = std::sqrt(log_n / nd);
        text += "Uncertainty bonus = √(ln(" + ns + " + 1) / " + ns + ") ≈ √(" + fixed3(log_n) + " / " + ns +
                ") ≈ " + fixed3(bonus);
        break;
      }
      default:
        bonus = 1.0 / std::sqrt(nd);
        text += "Uncertainty bonus = 1 / √" + ns + " ≈ " + fixed3(bonus);
        break;
    }
    text += "; UCB = " + fixed3(q) + " + " + c + " × " + fixed3(bonus) + " = " + fixed3(q + spec.c * bonus) + "\n";
  }
  if (state.pulls(d.arm) == 0) {
    text += "\n" + first_unpulled_note(d.arm);
  } else {
    text += "\nBased on these calculations, I choose arm " + std::to_string(d.arm) +
            " as it has the highest UCB value.";
  }
  return text;
}

std::string greedy_rationale(const SummaryState& state, const PolicyDecision& d, bool explored_randomly) {
  if (explored_randomly) {
    return "This round I explore: I pick an arm uniformly at random, which gives arm " + std::to_string(d.arm) + ".";
  }
  std::string text = "Let me compare the average rewards of the arms:\n\n";
  for (std::size_t a = 0; a < state.k(); ++a) {
    text += "Arm " + std::to_string(a) + ": ";
    if (const auto q = state.mean(a)) {
      text += "average reward " + fixed3(*q) + " over " + count_label(state.pulls(a)) + "\n";
    } else {
      text += "not pulled yet\n";
    }
  }
  if (state.pulls(d.arm) == 0) {
    text += "\n" + first_unpulled_note(d.arm);
  } else {
    text += "\nArm " + std::to_string(d.arm) + " has the highest average reward, so I choose arm " +
            std::to_string(d.arm) + ".";
  }
  return text;
}

std::string ts_rationale(const SummaryState& state, const PolicyDecision& d) {
  std::string text = "Let me draw one sample from each arm's posterior over its mean reward:\n\n";
  for (std::size_t a = 0; a < state.k(); ++a) {
    text += "Arm " + std::to_string(a) + " (" + count_label(state.pulls(a)) + "): sample " + fixed3((*d.scores)[a]) + "\n";
  }
  text += "\nArm " + std::to_string(d.arm) + " has the highest sample, so I choose arm " + std::to_string(d.arm) + ".";
  return text;
}

}  // namespace

std::string format_constant(double c) {
  return c == 0.5 ? std::string("1/2") : shortest(c);
}

ScriptedAgent::ScriptedAgent(PolicySpec spec, const EnvFamilySpec* env) : policy_(std::move(spec), env) {}

PolicyDecision ScriptedAgent::decide(const SummaryState& state, std::uint64_t episode_id, std::size_t step) const {
  auto rng = policy_step_rng(episode_id, step);
  return policy_.decide(state, rng);
}

std::string ScriptedAgent::respond(const SummaryState& state, std::uint64_t episode_id, std::size_t step) const {
  auto rng = policy_step_rng(episode_id, step);
  const auto& spec = policy_.spec();
  bool explored_randomly = false;
  if (spec.kind == PolicyKind::EpsGreedy && spec.eps > 0.0) {
    auto probe = rng;
    explored_randomly = probe.uniform01() < spec.eps;
  }
  const auto d = policy_.decide(state, rng);

  std::string rationale;
  switch (spec.kind) {
    case PolicyKind::Ucb:
    case PolicyKind::UcbVarLog:
    case PolicyKind::UcbVarInvSqrt:
      rationale = ucb_family_rationale(state, spec, d);
      break;
    case PolicyKind::Greedy:
    case PolicyKind::EpsGreedy:
      rationale = greedy_rationale(state, d, explored_randomly);
      break;
    case PolicyKind::Ts:
      rationale = ts_rationale(state, d);
      break;
  }
  return "<think> " + rationale + "\n</think>\n" + answer_block(d.arm);
}

std::string encode_request(const AgentRequest& request) {
  json means = json::array();
  for (std::size_t a = 0; a < request.state.k(); ++a) {
    const auto m = request.state.mean(a);
    means.push_back(m ? json(*m) : json(nullptr));
  }
  json j;
  j["episode_id"] = request.episode_id;
  j["step"] = request.step;
  j["k"] = request.k;
  j["prompt"] = request.prompt;
  j["state"] = {{"pulls", std::vector<std::uint64_t>(request.state.pull_counts().begin(),
                                                     request.state.pull_counts().end())},
                {"means", std::move(means)}};
  return j.dump();
}

AgentRequest decode_request(std::string_view line) {
  try {
    const json j = json::parse(line);
    AgentRequest r;
    r.episode_id = j.at("episode_id").get<std::uint64_t>();
    r.step = j.at("step").get<std::size_t>();
    r.k = j.at("k").get<std::size_t>();
    r.prompt = j.value("prompt", std::string{});
    const auto pulls = j.at("state").at("pulls").get<std::vector<std::uint64_t>>();
    const auto& jm = j.at("state").at("means");
    if (!jm.is_array() || jm.size() != pulls.size()) throw ProtocolError("state.means and state.pulls differ in length");
    if (pulls.size() != r.k) throw ProtocolError("state has " + std::to_string(pulls.size()) + " arms but k = " + std::to_string(r.k));
    std::vector<double> means(pulls.size(), 0.0);
    for (std::size_t a = 0; a < pulls.size(); ++a) {
      if (pulls[a] > 0) {
        if (jm[a].is_null()) throw ProtocolError("pulled arm " + std::to_string(a) + " has no mean");
        means[a] = jm[a].get<double>();
      }
    }
    r.state = SummaryState(pulls, means);
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  }
}

std::string encode_response(std::string_view text) {
  return json{{"text", std::string(text)}}.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string encode_error(std::string_view message) {
  return json{{"error", std::string(message)}}.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string decode_response(std::string_view line) {
  try {
    const json j = json::parse(line);
    if (j.contains("error")) throw ProtocolError("agent error: " + j.at("error").get<std::string>());
    return j.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
}

std::string handle_request_line(const ScriptedAgent& agent, std::string_view line) {
  try {
    const AgentRequest request = decode_request(line);
    return encode_response(agent.respond(request.state, request.episode_id, request.step));
  } catch (const std::exception& e) {
    return encode_error(e.what());
  }
}

ScriptedAgentDecider::ScriptedAgentDecider(PolicySpec spec, const EnvFamilySpec* env) : agent_(std::move(spec), env) {}

StepChoice ScriptedAgentDecider::choose(const SummaryState& state, const StepContext& ctx) {
  auto text = agent_.respond(state, ctx.episode_seed, ctx.step);
  const auto parsed = parse_response(text, ctx.k);
  StepChoice choice;
  if (parsed.valid) choice.arm = parsed.arm;
  choice.response = std::move(text);
  return choice;
}

std::string ScriptedAgentDecider::label() const {
  return to_string(agent_.policy().spec());
}

}  // namespace metabandit
