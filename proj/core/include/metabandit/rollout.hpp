#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metabandit/env.hpp"
#include "metabandit/policies.hpp"
#include "metabandit/rewards.hpp"

namespace metabandit {

/// Identifies one decision point. `episode_seed` doubles as the wire
/// protocol's episode_id.
struct StepContext {
  std::uint64_t episode_seed = 0;
  std::size_t step = 1;  // 1-based
  std::size_t k = 0;
};

struct StepChoice {
  std::optional<std::size_t> arm;  // nullopt when the response was invalid
  std::optional<std::string> response;
  /// Set when the decider could not produce any answer (transport failure).
  std::optional<std::string> failure;
};

/// Anything that maps a summary state to an arm: in-process policies and
/// external agents alike. One Decider is used by one thread at a time.
class Decider {
 public:
  virtual ~Decider() = default;
  virtual StepChoice choose(const SummaryState& state, const StepContext& ctx) = 0;
  virtual std::string label() const = 0;
};

using DeciderFactory = std::function<std::unique_ptr<Decider>()>;

/// Randomness for a policy's decision at one step. Keyed on (seed, step)
/// rather than a running stream so a remote agent can reproduce it from the
/// request alone.
RngStream policy_step_rng(std::uint64_t episode_seed, std::size_t step);
RngStream oracle_step_rng(std::uint64_t episode_seed, std::size_t step);

class PolicyDecider final : public Decider {
 public:
  PolicyDecider(PolicySpec spec, const EnvFamilySpec* env) : policy_(std::move(spec), env) {}
  StepChoice choose(const SummaryState& state, const StepContext& ctx) override;
  std::string label() const override { return to_string(policy_.spec()); }

 private:
  Policy policy_;
};

struct EpisodeConfig {
  EnvFamilySpec env;
  std::size_t horizon = 300;
  std::uint64_t seed = 0;
  PolicySpec oracle = PolicySpec{};  // ucb:C=0.5
  std::vector<RewardScheme> reward_schemes{RewardScheme::Og, RewardScheme::Stg, RewardScheme::Alg};
  RewardShaping shaping;
  /// Keep raw agent responses in the trajectory.
  bool record_responses = false;
};

struct Transition {
  std::size_t step = 1;
  SummaryState state_before{1};
  std::optional<std::size_t> action;
  bool valid = true;
  double raw_reward = 0.0;
  /// Same order as EpisodeConfig::reward_schemes.
  std::vector<std::pair<RewardScheme, double>> shaped;
  std::size_t oracle_arm = 0;
  bool greedy = false;
  bool optimal = false;
  std::optional<std::string> response;

  std::optional<double> shaped_value(RewardScheme scheme) const;
};

struct Trajectory {
  EpisodeConfig config;
  std::string decider;
  std::vector<double> true_means;
  std::size_t optimal_arm = 0;
  std::vector<Transition> transitions;
  std::optional<std::string> failure;

  double mu_star() const;
  double mu_min() const;
};

/// Instance for an episode seed; independent of everything the decider does.
BanditInstance episode_instance(const EnvFamilySpec& env, std::uint64_t episode_seed);

/// Reward noise source. The n-th pull of arm a always reads the n-th draw of
/// arm a's own substream, so two policies on the same seed see the same
/// reward sequence per arm.
class EpisodeRewards {
 public:
  EpisodeRewards(const BanditInstance& instance, std::uint64_t episode_seed);
  double pull(std::size_t arm);

 private:
  const BanditInstance* instance_;
  std::vector<RngStream> streams_;
};

Trajectory run_episode(Decider& decider, const EpisodeConfig& config);

/// One trajectory per seed, in seed-list order, whatever `jobs` is. Each
/// worker thread owns one decider from `factory`. A failing episode is
/// recorded in its trajectory and does not stop the batch.
std::vector<Trajectory> run_batch(const DeciderFactory& factory, const EpisodeConfig& base,
                                  std::span<const std::uint64_t> seeds, std::size_t jobs = 1);

/// The fixed evaluation seed list: 0, 1, ..., n-1.
std::vector<std::uint64_t> canonical_seeds(std::size_t n);

}  // namespace metabandit
