#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "metabandit/agent_protocol.hpp"
#include "metabandit/analytics.hpp"
#include "oracles.hpp"

using namespace metabandit;

namespace {

// Hand-built trajectory; each pull returns the arm's true mean.
Trajectory scripted_trajectory(const std::vector<double>& means, const std::vector<std::optional<std::size_t>>& actions) {
  Trajectory traj;
  traj.config.env = parse_family_spec("Gaussian" + std::to_string(means.size()) + "_Var1_MeanN0");
  traj.config.horizon = actions.size();
  traj.true_means = means;
  traj.optimal_arm = static_cast<std::size_t>(std::max_element(means.begin(), means.end()) - means.begin());
  SummaryState state(means.size());
  for (std::size_t s = 0; s < actions.size(); ++s) {
    Transition tr;
    tr.step = s + 1;
    tr.state_before = state;
    tr.action = actions[s];
    tr.valid = actions[s].has_value();
    if (actions[s]) state.record(*actions[s], means[*actions[s]]);
    traj.transitions.push_back(tr);
  }
  return traj;
}

Trajectory run(const std::string& env, const std::string& policy, std::size_t horizon, std::uint64_t seed) {
  EpisodeConfig cfg;
  cfg.env = parse_family_spec(env);
  cfg.horizon = horizon;
  cfg.seed = seed;
  PolicyDecider d(parse_policy_spec(policy), &cfg.env);
  return run_episode(d, cfg);
}

SummaryState worked_state() { return SummaryState({1, 2, 7, 3, 7}, {-0.249, 0.281, 0.790, 0.279, 1.015}); }

}  // namespace

TEST(Regret, Examples) {
  const auto t = scripted_trajectory({0.2, 0.8}, {1, 0, 1});
  EXPECT_NEAR(cumulative_regret(t, 3), 0.6, 1e-12);
  EXPECT_NEAR(cumulative_regret(t, 1), 0.0, 1e-12);

  const auto best = scripted_trajectory({0.2, 0.8, 0.5}, std::vector<std::optional<std::size_t>>(10, 1));
  for (std::size_t s = 1; s <= 10; ++s) EXPECT_EQ(cumulative_regret(best, s), 0.0);
  const auto worst = scripted_trajectory({0.2, 0.8, 0.5}, std::vector<std::optional<std::size_t>>(10, 0));
  for (std::size_t s = 1; s <= 10; ++s) EXPECT_NEAR(cumulative_regret(worst, s), 0.6 * s, 1e-12);
  EXPECT_THROW(cumulative_regret(t, 4), std::out_of_range);
}

TEST(Regret, InvalidRoundsCountAsWorstCase) {
  const auto t = scripted_trajectory({0.2, 0.8}, {1, std::nullopt, 1});
  EXPECT_NEAR(cumulative_regret(t, 3), 0.6, 1e-12);
  EXPECT_NEAR(time_avg_reward(t, 3), (0.8 + 0.2 + 0.8) / 3, 1e-12);
  AnalyticsOptions lenient;
  lenient.worst_case_invalid = false;
  EXPECT_NEAR(cumulative_regret(t, 3, lenient), 0.0, 1e-12);
}

TEST(AvgReward, Examples) {
  const auto t = scripted_trajectory({0.2, 0.8, -1.0}, {2, 1, 1, 0});
  EXPECT_DOUBLE_EQ(time_avg_reward(t, 1), -1.0);
  EXPECT_NEAR(time_avg_reward(t, 4), (-1.0 + 0.8 + 0.8 + 0.2) / 4, 1e-12);
  EXPECT_THROW(time_avg_reward(t, 0), std::invalid_argument);
}

TEST(AvgReward, UniformRandomPolicyAveragesTheMeans) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> coin(0, 1);
  std::vector<std::optional<std::size_t>> actions(100000);
  for (auto& a : actions) a = coin(gen);
  const auto t = scripted_trajectory({0.1, 0.7}, actions);
  // sd of the mean is 0.3 / sqrt(1e5) ~ 1e-3
  EXPECT_NEAR(time_avg_reward(t, actions.size()), 0.4, 0.005);
}

TEST(BestArmFreq, Examples) {
  EXPECT_EQ(best_arm_freq(scripted_trajectory({0.2, 0.8}, {1, 1, 1}), 3), 1.0);
  EXPECT_EQ(best_arm_freq(scripted_trajectory({0.2, 0.8}, {0, 0, 0}), 3), 0.0);
  EXPECT_EQ(best_arm_freq(scripted_trajectory({0.2, 0.8}, {1, 0, 1, 0}), 4), 0.5);
}

TEST(GreedyFreq, PureGreedyIsGreedyAfterColdStart) {
  const auto traj = run("Gaussian5_Var1_MeanN0", "greedy", 60, 4);
  const double before = greedy_freq(traj, 5) * 5;
  const double after = greedy_freq(traj, 60) * 60;
  EXPECT_NEAR(after - before, 55.0, 1e-9);
  AnalyticsOptions excluded;
  excluded.cold_start = ColdStartRound::Excluded;
  EXPECT_NEAR(greedy_freq(traj, 60, excluded) * 59, after, 1e-9);
}

TEST(GreedyFreq, AlwaysWorstIsNeverGreedy) {
  // Means separate after the first round-robin; afterwards pick the worst.
  std::vector<std::optional<std::size_t>> actions{0, 1, 2};
  for (int i = 0; i < 10; ++i) actions.push_back(0);
  const auto t = scripted_trajectory({0.1, 0.5, 0.9}, actions);
  AnalyticsOptions excluded;
  excluded.cold_start = ColdStartRound::Excluded;
  // Rounds 2 and 3 pick an unpulled arm, which is not among the pulled argmax.
  EXPECT_EQ(greedy_freq(t, 13, excluded), 0.0);
  EXPECT_EQ(greedy_freq(t, 13), 0.0);
}

TEST(GreedyFreq, TiesCountAsGreedy) {
  // Round 2 picks the unpulled arm; from round 3 on both arms tie.
  const auto t = scripted_trajectory({0.5, 0.5}, {0, 1, 0, 1, 1, 0});
  AnalyticsOptions excluded;
  excluded.cold_start = ColdStartRound::Excluded;
  EXPECT_DOUBLE_EQ(greedy_freq(t, 6, excluded), 4.0 / 5.0);
}

TEST(SuffixFailure, Examples) {
  std::vector<std::optional<std::size_t>> actions(300, 0);
  actions[9] = 1;
  const auto t = scripted_trajectory({0.2, 0.8}, actions);
  EXPECT_FALSE(suffix_failure(t, 10));
  EXPECT_TRUE(suffix_failure(t, 11));
  EXPECT_TRUE(suffix_failure(t, 50));
  actions[299] = 1;
  const auto late = scripted_trajectory({0.2, 0.8}, actions);
  for (std::size_t s = 1; s <= 300; ++s) EXPECT_FALSE(suffix_failure(late, s));
  EXPECT_THROW(suffix_failure(late, 0), std::out_of_range);
  EXPECT_THROW(suffix_failure(late, 301), std::out_of_range);
}

TEST(SuffixFailure, Monotone) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto t = run("Bernoulli5_Delta0.2", "greedy", 100, seed);
    bool seen = false;
    for (std::size_t s = 1; s <= 100; ++s) {
      const bool f = suffix_failure(t, s);
      if (seen) EXPECT_TRUE(f);
      seen = seen || f;
    }
  }
}

TEST(Metrics, ComplementarityAndCounts) {
  for (const char* policy : {"ucb:C=0.5", "greedy", "eps_greedy:eps=0.1", "ts"}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto t = run("Gaussian5_Var1_MeanN0", policy, 120, seed);
      double previous = 0.0;
      for (std::size_t s = 1; s <= 120; ++s) {
        const double regret = cumulative_regret(t, s);
        EXPECT_NEAR(regret / s + time_avg_reward(t, s), t.mu_star(), 1e-9);
        EXPECT_GE(regret, previous - 1e-12);
        previous = regret;
        const double count = best_arm_freq(t, s) * s;
        EXPECT_NEAR(count, std::round(count), 1e-9);
      }
    }
  }
}

TEST(MatchRate, SelfMatchAndEquivalentPolicies) {
  const auto u = run("Gaussian5_Var1_MeanN0", "ucb:C=0.5", 80, 2);
  const auto self = match_flags(u, parse_policy_spec("ucb:C=0.5"));
  EXPECT_TRUE(std::all_of(self.begin(), self.end(), [](bool f) { return f; }));
  const auto g = run("Gaussian5_Var1_MeanN0", "greedy", 80, 2);
  const auto flags = match_flags(g, parse_policy_spec("ucb:C=0"));
  EXPECT_TRUE(std::all_of(flags.begin(), flags.end(), [](bool f) { return f; }));
}

TEST(MatchRate, StoredOracleAnnotationIsReproduced) {
  const auto t = run("Gaussian5_Var1_MeanN0", "greedy", 80, 3);
  const auto flags = match_flags(t, t.config.oracle);
  for (std::size_t s = 0; s < t.transitions.size(); ++s) {
    EXPECT_EQ(flags[s], t.transitions[s].action == t.transitions[s].oracle_arm);
  }
}

TEST(MatchRate, VariantAgreesLessEarlyThanLate) {
  std::vector<Trajectory> trajs;
  for (std::uint64_t seed = 0; seed < 64; ++seed) trajs.push_back(run("Gaussian5_Var1_MeanN0", "ucb:C=0.5", 300, seed));
  const auto points = match_rate_by_step(trajs, parse_policy_spec("ucb:C=0.5"), parse_policy_spec("ucb_var_log:C=0.5"));
  ASSERT_EQ(points.size(), 300u);
  double early = 0.0, late = 0.0;
  for (const auto& p : points) {
    EXPECT_EQ(p.episodes, 64u);
    EXPECT_EQ(p.oracle_rate, 1.0);
    ASSERT_TRUE(p.comparison_rate.has_value());
    if (p.step > 5 && p.step <= 50) early += *p.comparison_rate / 45;
    if (p.step > 250) late += *p.comparison_rate / 50;
  }
  EXPECT_LT(early, 1.0);
  EXPECT_GT(late, early);
}

TEST(UcbDiff, AllZeroClaimsGiveMeanAbsoluteOracleValue) {
  const auto s = worked_state();
  std::string response = "<think>\n";
  for (int a = 0; a < 5; ++a) response += "Arm " + std::to_string(a) + ": UCB = 0\n";
  response += "</think>\n<answer>Arm 4</answer>";

  double expected = 0.0;
  for (std::size_t a = 0; a < 5; ++a) {
    expected += std::fabs(oracle::ucb_value(s.mean_values()[a], static_cast<double>(s.pulls(a)), 20.0, 0.5)) / 5;
  }
  const auto diff = ucb_value_abs_diff(response, s, 0.5);
  ASSERT_TRUE(diff.has_value());
  EXPECT_EQ(diff->arms_used, 5u);
  EXPECT_EQ(diff->arms_excluded, 0u);
  EXPECT_NEAR(diff->mean_abs_diff, expected, 1e-12);
}

TEST(UcbDiff, ScriptedUcbAgentIsWithinDisplayRounding) {
  const ScriptedAgent agent(parse_policy_spec("ucb:C=0.5"), nullptr);
  const auto s = worked_state();
  const auto diff = ucb_value_abs_diff(agent.respond(s, 0, 21), s, 0.5);
  ASSERT_TRUE(diff.has_value());
  EXPECT_EQ(diff->arms_used, 5u);
  EXPECT_LE(diff->mean_abs_diff, 0.0005);
}

TEST(UcbDiff, MissingThinkOrNumbersIsAbsent) {
  const auto s = worked_state();
  EXPECT_FALSE(ucb_value_abs_diff("<answer>Arm 4</answer>", s, 0.5).has_value());
  EXPECT_FALSE(ucb_value_abs_diff("<think>pick the best one</think><answer>Arm 4</answer>", s, 0.5).has_value());
}

TEST(UcbDiff, UnpulledArmsAreExcluded) {
  const SummaryState s({0, 3, 2}, {0.0, 0.5, 0.25});
  const auto claimed = extract_claimed_ucb_values(
      "<think>\nArm 0: UCB = inf\nFor Arm 1, UCB = 0.1 + 0.2 = 0.9\nArm 2: UCB is 0.7\n</think>", 3);
  ASSERT_EQ(claimed.count(1), 1u);
  EXPECT_EQ(claimed.at(1), 0.9);
  EXPECT_EQ(claimed.at(2), 0.7);
  const auto diff = ucb_value_abs_diff(claimed, s, 0.5);
  ASSERT_TRUE(diff.has_value());
  EXPECT_EQ(diff->arms_used, 2u);
  EXPECT_EQ(diff->arms_excluded, 1u);
}

TEST(Quantiles, OneToHundred) {
  std::vector<double> xs(100);
  std::iota(xs.begin(), xs.end(), 1.0);
  const auto b = box_stats(xs);
  EXPECT_DOUBLE_EQ(b.median, 50.5);
  EXPECT_DOUBLE_EQ(b.q25, 25.75);
  EXPECT_DOUBLE_EQ(b.q75, 75.25);
  EXPECT_DOUBLE_EQ(b.mean, 50.5);
  EXPECT_EQ(b.whisker_low, 1.0);
  EXPECT_EQ(b.whisker_high, 100.0);
  for (double p : {0.0, 0.1, 0.33, 0.5, 0.9, 1.0}) EXPECT_DOUBLE_EQ(quantile_linear(xs, p), oracle::linear_quantile(xs, p));
  EXPECT_THROW(box_stats({}), std::invalid_argument);
}

TEST(Quantiles, WhiskersStopAtLastPointInsideFence) {
  const auto b = box_stats({1, 2, 3, 4, 5, 6, 7, 8, 100});
  EXPECT_EQ(b.whisker_high, 8.0);
  EXPECT_EQ(b.max, 100.0);
  const auto same = box_stats(std::vector<double>(7, 2.5));
  EXPECT_EQ(same.q25, same.q75);
  EXPECT_EQ(same.median, 2.5);
}

TEST(Aggregate, SuffixFailFrequencyAndKeys) {
  std::vector<EpisodeMetrics> eps(64);
  for (std::size_t i = 0; i < 64; ++i) {
    eps[i].seed = i;
    eps[i].length = 300;
    eps[i].suffix_fail[50] = i == 3 || i == 40;
    eps[i].cum_regret[300] = static_cast<double>(i);
  }
  const auto r = aggregate(eps);
  EXPECT_EQ(r.episodes, 64u);
  EXPECT_DOUBLE_EQ(r.suffix_fail_freq.at(50), 0.03125);
  ASSERT_EQ(r.metrics.count("cum_regret@300"), 1u);
  EXPECT_DOUBLE_EQ(r.metrics.at("cum_regret@300").median, 31.5);
  EXPECT_THROW(aggregate(std::span<const EpisodeMetrics>{}), std::invalid_argument);
}

TEST(EpisodeMetrics, CheckpointsBeyondLengthAreSkipped) {
  const auto t = run("Gaussian5_Var1_MeanN0", "ucb:C=0.5", 100, 1);
  MetricsRequest req;
  req.oracle = parse_policy_spec("ucb:C=0.5");
  const auto m = episode_metrics(t, req);
  EXPECT_EQ(m.length, 100u);
  EXPECT_EQ(m.cum_regret.count(50), 1u);
  EXPECT_EQ(m.cum_regret.count(150), 0u);
  ASSERT_TRUE(m.match_rate.has_value());
  EXPECT_EQ(m.match_rate->at(50), 1.0);
  EXPECT_FALSE(m.ucb_abs_diff.has_value());
}

TEST(EpisodeMetrics, UcbDiffFromRecordedResponses) {
  EpisodeConfig cfg;
  cfg.env = parse_family_spec("Gaussian5_Var1_MeanN0");
  cfg.horizon = 50;
  cfg.record_responses = true;
  ScriptedAgentDecider agent(parse_policy_spec("ucb:C=0.5"), &cfg.env);
  const auto t = run_episode(agent, cfg);
  MetricsRequest req;
  req.ucb_c = 0.5;
  const auto m = episode_metrics(t, req);
  ASSERT_TRUE(m.ucb_abs_diff.has_value());
  EXPECT_FALSE(m.ucb_abs_diff->empty());
  for (const auto& [step, d] : *m.ucb_abs_diff) EXPECT_LE(d, 0.0005) << step;
}
