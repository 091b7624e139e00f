#include <stdexcept>

#include "metabandit/agent_protocol.hpp"
#include "metabandit/text_format.hpp"

namespace metabandit {

PromptText render_prompt(const SummaryState& state, std::size_t k) {
  if (state.k() != k) {
    throw std::invalid_argument("state has " + std::to_string(state.k()) + " arms, prompt wants " + std::to_string(k));
  }
  std::string text = "In a " + std::to_string(k) + "-armed bandit problem, here are the results of previous arm pulls:\n\n";
  for (std::size_t a = 0; a < k; ++a) {
    const auto n = state.pulls(a);
    text += "Arm " + std::to_string(a) + ": " + std::to_string(n) + (n == 1 ? " pull" : " pulls");
    if (const auto q = state.mean(a)) {
      text += ", avg. reward " + fixed3(*q);
    } else {
      text += ", no reward yet";
    }
    text += '\n';
  }
  text +=
      "\nWhich arm should be pulled next? Show your reasoning in <think> </think> tags and your final "
      "answer in <answer> </answer> tags.";
  return PromptText{std::move(text)};
}

}  // namespace metabandit
