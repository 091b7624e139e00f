#include "metabandit/rollout.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "metabandit/trajectory_io.hpp"

using namespace metabandit;

namespace {

class ScriptDecider final : public Decider {
 public:
  explicit ScriptDecider(std::vector<std::optional<std::size_t>> arms, std::size_t fail_at = 0)
      : arms_(std::move(arms)), fail_at_(fail_at) {}
  StepChoice choose(const SummaryState&, const StepContext& ctx) override {
    StepChoice c;
    if (fail_at_ != 0 && ctx.step == fail_at_) {
      c.failure = "agent went away";
      return c;
    }
    c.arm = arms_[(ctx.step - 1) % arms_.size()];
    return c;
  }
  std::string label() const override { return "script"; }

 private:
  std::vector<std::optional<std::size_t>> arms_;
  std::size_t fail_at_;
};

EpisodeConfig config(const char* env, std::size_t horizon, std::uint64_t seed) {
  EpisodeConfig c;
  c.env = parse_family_spec(env);
  c.horizon = horizon;
  c.seed = seed;
  return c;
}

std::string serialize(const Trajectory& t) {
  std::ostringstream ss;
  write_trajectory(ss, t);
  return ss.str();
}

}  // namespace

TEST(RunEpisode, GreedyLocksOntoDeterministicWinner) {
  // Bernoulli2_Delta with top mean 1 gives arms (1, 0) in some order.
  auto cfg = config("Bernoulli2_Delta0.999", 10, 3);
  cfg.env.top_mean = 1.0;
  cfg.env.delta = 1.0;
  PolicyDecider greedy(parse_policy_spec("greedy"), &cfg.env);
  const auto traj = run_episode(greedy, cfg);
  ASSERT_EQ(traj.transitions.size(), 10u);
  double total = 0;
  for (const auto& tr : traj.transitions) total += tr.raw_reward;
  EXPECT_GE(total, 9.0);
  for (std::size_t i = 2; i < 10; ++i) EXPECT_EQ(traj.transitions[i].action, traj.optimal_arm);
}

TEST(RunEpisode, UcbSelfPlayEarnsFullAlgorithmicReward) {
  const auto cfg = config("Gaussian5_Var1_MeanN0", 300, 11);
  PolicyDecider ucb(parse_policy_spec("ucb:C=0.5"), &cfg.env);
  const auto traj = run_episode(ucb, cfg);
  ASSERT_EQ(traj.transitions.size(), 300u);
  for (const auto& tr : traj.transitions) {
    EXPECT_EQ(tr.shaped_value(RewardScheme::Alg), 1.0);
    EXPECT_EQ(tr.action, tr.oracle_arm);
  }
}

TEST(RunEpisode, StateChainsThroughUpdateStateAndOracleIsConsistent) {
  const auto cfg = config("Gaussian4_Var1_MeanU", 120, 5);
  PolicyDecider ts(parse_policy_spec("ts"), &cfg.env);
  const auto traj = run_episode(ts, cfg);
  SummaryState replay(4);
  const Policy oracle(cfg.oracle, &cfg.env);
  for (const auto& tr : traj.transitions) {
    EXPECT_EQ(tr.state_before, replay);
    auto rng = oracle_step_rng(cfg.seed, tr.step);
    EXPECT_EQ(oracle.decide(tr.state_before, rng).arm, tr.oracle_arm);
    EXPECT_EQ(tr.optimal, tr.action == traj.optimal_arm);
    replay = update_state(replay, *tr.action, tr.raw_reward);
  }
}

TEST(RunEpisode, DeterministicAcrossRuns) {
  const auto cfg = config("Bernoulli5_Uniform", 80, 42);
  for (const char* p : {"ts", "eps_greedy:eps=0.2", "ucb_var_invsqrt:C=0.5"}) {
    PolicyDecider a(parse_policy_spec(p), &cfg.env), b(parse_policy_spec(p), &cfg.env);
    EXPECT_EQ(serialize(run_episode(a, cfg)), serialize(run_episode(b, cfg))) << p;
  }
}

TEST(RunEpisode, InstanceIndependentOfPolicy) {
  const auto cfg = config("Gaussian5_Var1_MeanN0", 20, 8);
  PolicyDecider ucb(parse_policy_spec("ucb"), &cfg.env);
  PolicyDecider eps(parse_policy_spec("eps_greedy:eps=1"), &cfg.env);
  EXPECT_EQ(run_episode(ucb, cfg).true_means, run_episode(eps, cfg).true_means);
}

TEST(RunEpisode, InvalidActionsLeaveStateAndShapeRewards) {
  const auto cfg = config("Gaussian3_Var1_MeanN0", 6, 1);
  ScriptDecider d({0, std::nullopt, 7});
  const auto traj = run_episode(d, cfg);
  ASSERT_EQ(traj.transitions.size(), 6u);
  const auto& bad = traj.transitions[1];
  EXPECT_FALSE(bad.valid);
  EXPECT_FALSE(bad.action.has_value());
  EXPECT_EQ(bad.shaped_value(RewardScheme::Og), -0.5);
  EXPECT_EQ(bad.shaped_value(RewardScheme::Stg), 0.0);
  EXPECT_EQ(bad.shaped_value(RewardScheme::Alg), 0.0);
  EXPECT_EQ(traj.transitions[2].state_before, traj.transitions[1].state_before);
  EXPECT_FALSE(traj.transitions[2].valid);  // arm 7 does not exist
  EXPECT_EQ(traj.transitions[3].state_before.total_pulls(), 1u);
}

TEST(RunEpisode, TransportFailureTruncates) {
  const auto cfg = config("Gaussian3_Var1_MeanN0", 10, 1);
  ScriptDecider d({0}, 4);
  const auto traj = run_episode(d, cfg);
  EXPECT_EQ(traj.transitions.size(), 3u);
  ASSERT_TRUE(traj.failure.has_value());
  EXPECT_NE(traj.failure->find("agent went away"), std::string::npos);
}

TEST(RunBatch, OneTrajectoryPerSeedInOrder) {
  auto cfg = config("Gaussian5_Var1_MeanN0", 40, 0);
  const auto factory = [&] { return std::make_unique<PolicyDecider>(parse_policy_spec("ts"), &cfg.env); };
  const auto seeds = canonical_seeds(64);
  const auto serial = run_batch(factory, cfg, seeds, 1);
  const auto parallel = run_batch(factory, cfg, seeds, 4);
  ASSERT_EQ(serial.size(), 64u);
  std::vector<std::vector<double>> distinct;
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].config.seed, seeds[i]);
    EXPECT_EQ(serialize(serial[i]), serialize(parallel[i]));
    distinct.push_back(serial[i].true_means);
  }
  std::sort(distinct.begin(), distinct.end());
  EXPECT_EQ(std::unique(distinct.begin(), distinct.end()), distinct.end());

  PolicyDecider single(parse_policy_spec("ts"), &cfg.env);
  cfg.seed = 17;
  const std::vector<std::uint64_t> one{17};
  EXPECT_EQ(serialize(run_batch(factory, cfg, one)[0]), serialize(run_episode(single, cfg)));

  std::vector<std::uint64_t> permuted(seeds.rbegin(), seeds.rend());
  const auto reversed = run_batch(factory, cfg, permuted, 2);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_EQ(serialize(reversed[seeds.size() - 1 - i]), serialize(serial[i]));
  }
  EXPECT_THROW(run_batch(factory, cfg, std::vector<std::uint64_t>{}), std::invalid_argument);
}

TEST(RunBatch, FailuresDoNotAbortTheBatch) {
  const auto cfg = config("Gaussian2_Var1_MeanN0", 5, 0);
  const auto factory = [] { return std::make_unique<ScriptDecider>(std::vector<std::optional<std::size_t>>{0}, 2); };
  const auto trajs = run_batch(factory, cfg, canonical_seeds(3), 2);
  ASSERT_EQ(trajs.size(), 3u);
  for (const auto& t : trajs) {
    EXPECT_TRUE(t.failure.has_value());
    EXPECT_EQ(t.transitions.size(), 1u);
  }
}

TEST(EpisodeRewards, PerArmStreamsIgnoreOtherArms) {
  const auto env = parse_family_spec("Gaussian3_Var1_MeanN0");
  const auto inst = episode_instance(env, 4);
  EpisodeRewards a(inst, 4), b(inst, 4);
  const double a0 = a.pull(0);
  b.pull(1);
  b.pull(2);
  EXPECT_EQ(b.pull(0), a0);
}
