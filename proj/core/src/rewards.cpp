#include "metabandit/rewards.hpp"

#include <algorithm>
#include <stdexcept>

#include "metabandit/errors.hpp"
#include "metabandit/text_format.hpp"

namespace metabandit {

double og_reward(const StepOutcome& outcome, const RewardShaping& shaping) {
  return outcome.valid ? outcome.raw_reward : shaping.og_invalid_reward;
}

double stg_reward(const BanditInstance& instance, const StepOutcome& outcome) {
  if (!outcome.valid || !outcome.agent_arm) return 0.0;
  const std::size_t arm = *outcome.agent_arm;
  if (arm >= instance.k()) throw std::out_of_range("arm index " + std::to_string(arm) + " out of range");
  const double span = instance.mu_star() - instance.mu_min();
  if (span <= 0.0) return 1.0;
  const double r = (instance.true_means()[arm] - instance.mu_min()) / span;
  return std::clamp(r, 0.0, 1.0);
}

double alg_reward(const StepOutcome& outcome) {
  return outcome.valid && outcome.agent_arm && *outcome.agent_arm == outcome.oracle_arm ? 1.0 : 0.0;
}

double shaped_reward(RewardScheme scheme, const BanditInstance& instance, const StepOutcome& outcome,
                     const RewardShaping& shaping) {
  switch (scheme) {
    case RewardScheme::Og:
      return og_reward(outcome, shaping);
    case RewardScheme::Stg:
      return stg_reward(instance, outcome);
    case RewardScheme::Alg:
      return alg_reward(outcome);
  }
  return 0.0;
}

std::string_view to_string(RewardScheme scheme) noexcept {
  switch (scheme) {
    case RewardScheme::Og:
      return "og";
    case RewardScheme::Stg:
      return "stg";
    case RewardScheme::Alg:
      return "alg";
  }
  return "";
}

RewardScheme parse_reward_scheme(std::string_view text) {
  const auto t = trim(text);
  if (t == "og") return RewardScheme::Og;
  if (t == "stg") return RewardScheme::Stg;
  if (t == "alg") return RewardScheme::Alg;
  throw ParseError("unknown reward scheme '" + std::string(t) + "' (expected og, stg or alg)");
}

std::vector<RewardScheme> parse_reward_schemes(std::string_view text) {
  std::vector<RewardScheme> out;
  while (true) {
    const auto comma = text.find(',');
    const auto scheme = parse_reward_scheme(text.substr(0, comma));
    if (std::find(out.begin(), out.end(), scheme) == out.end()) out.push_back(scheme);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace metabandit
