#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metabandit/env.hpp"

namespace metabandit {

/// What happened on one turn, as seen by the reward transforms.
struct StepOutcome {
  double raw_reward = 0.0;
  bool valid = true;
  std::optional<std::size_t> agent_arm;  // present iff valid
  std::size_t oracle_arm = 0;
};

enum class RewardScheme { Og, Stg, Alg };

struct RewardShaping {
  /// Replaces the bandit reward on an unparseable response.
  double og_invalid_reward = -0.5;
};

/// Bandit reward as observed; `og_invalid_reward` on an invalid response.
double og_reward(const StepOutcome& outcome, const RewardShaping& shaping = {});

/// (mu_a - mu_min) / (mu_star - mu_min); 0 when invalid, 1 for any valid arm
/// when every arm has the same mean.
double stg_reward(const BanditInstance& instance, const StepOutcome& outcome);

/// 1 iff the response is valid and picks the oracle's arm.
double alg_reward(const StepOutcome& outcome);

double shaped_reward(RewardScheme scheme, const BanditInstance& instance, const StepOutcome& outcome,
                     const RewardShaping& shaping = {});

std::string_view to_string(RewardScheme scheme) noexcept;
RewardScheme parse_reward_scheme(std::string_view text);
/// Comma-separated list such as "og,stg,alg". Duplicates are dropped, order kept.
std::vector<RewardScheme> parse_reward_schemes(std::string_view text);

}  // namespace metabandit
