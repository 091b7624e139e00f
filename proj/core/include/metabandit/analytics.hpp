#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metabandit/policies.hpp"
#include "metabandit/rollout.hpp"

namespace metabandit {

/// How the cold-start round (every arm still unpulled) enters GreedyFreq.
enum class ColdStartRound {
  /// The round counts as a non-greedy round of the t rounds.
  NonGreedy,
  /// The round is dropped from the denominator.
  Excluded,
};

struct AnalyticsOptions {
  /// Rounds without a valid action add Delta_max regret and mu_min reward.
  /// When false they are skipped in the sums (still counted in t).
  bool worst_case_invalid = true;
  ColdStartRound cold_start = ColdStartRound::NonGreedy;
};

/// Checkpoints reported by default.
inline const std::vector<std::size_t> kDefaultCheckpoints{50, 150, 300};

// All @t metrics read the first t transitions and throw std::out_of_range if
// the trajectory is shorter than t. Regret and reward use true means.
double cumulative_regret(const Trajectory& traj, std::size_t t, const AnalyticsOptions& opts = {});
/// Throws std::invalid_argument for t == 0.
double time_avg_reward(const Trajectory& traj, std::size_t t, const AnalyticsOptions& opts = {});
double best_arm_freq(const Trajectory& traj, std::size_t t);
/// Ties with the best empirical mean count as greedy. Returns 0 when no
/// round is eligible.
double greedy_freq(const Trajectory& traj, std::size_t t, const AnalyticsOptions& opts = {});
/// True iff none of rounds t..T picks the optimal arm, T being the recorded
/// length. Requires 1 <= t <= T.
bool suffix_failure(const Trajectory& traj, std::size_t t);

/// Whether each step's action equals `spec`'s decision recomputed on the
/// recorded state. Stochastic policies reuse the oracle's per-step stream,
/// so the stored oracle annotation is reproduced exactly.
std::vector<bool> match_flags(const Trajectory& traj, const PolicySpec& spec);

struct UcbValueDiff {
  double mean_abs_diff = 0.0;
  std::size_t arms_used = 0;
  /// Arms whose claimed value could not be read, or whose true value is
  /// infinite.
  std::size_t arms_excluded = 0;
};

/// Per-arm UCB values claimed in a rationale. Inside the <think> span, a line
/// that starts with "Arm i" (optionally "For Arm i") and mentions "UCB"
/// claims the last number written after "UCB". Later lines override earlier
/// ones for the same arm.
std::map<std::size_t, double> extract_claimed_ucb_values(std::string_view response, std::size_t k);

/// Mean |claimed - true| over arms with a finite true UCB value (Q + C *
/// sqrt(ln t / N)). nullopt when nothing could be extracted.
std::optional<UcbValueDiff> ucb_value_abs_diff(const std::map<std::size_t, double>& claimed,
                                               const SummaryState& state, double c);
std::optional<UcbValueDiff> ucb_value_abs_diff(std::string_view response, const SummaryState& state, double c);

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  std::size_t length = 0;
  bool failed = false;
  std::map<std::size_t, double> cum_regret;
  std::map<std::size_t, double> avg_reward;
  std::map<std::size_t, double> best_arm_freq;
  std::map<std::size_t, double> greedy_freq;
  std::map<std::size_t, bool> suffix_fail;
  /// Fraction of steps <= t agreeing with the oracle.
  std::optional<std::map<std::size_t, double>> match_rate;
  /// Per-step mean UCB value difference, for steps with a readable response.
  std::optional<std::map<std::size_t, double>> ucb_abs_diff;
};

struct MetricsRequest {
  std::vector<std::size_t> checkpoints = kDefaultCheckpoints;
  AnalyticsOptions options;
  /// Also compute match rate against this policy.
  std::optional<PolicySpec> oracle;
  /// Exploration constant used to grade claimed UCB values in responses.
  std::optional<double> ucb_c;
};

/// Metrics at every checkpoint the trajectory reaches.
EpisodeMetrics episode_metrics(const Trajectory& traj, const MetricsRequest& req = {});

/// Box-plot summary with linear-interpolation quantiles (the (n-1)p rule).
/// Whiskers are the most extreme observations within 1.5 IQR of the box.
struct BoxStats {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
};

/// Throws std::invalid_argument on an empty sample.
double quantile_linear(std::span<const double> sorted, double p);
BoxStats box_stats(std::vector<double> values);

struct AggregateReport {
  std::size_t episodes = 0;
  std::size_t failed = 0;
  /// Keyed "<metric>@<t>", e.g. "cum_regret@300", plus "ucb_abs_diff".
  std::map<std::string, BoxStats> metrics;
  /// Fraction of episodes with a suffix failure at t.
  std::map<std::size_t, double> suffix_fail_freq;
};

/// Throws std::invalid_argument on an empty list.
AggregateReport aggregate(std::span<const EpisodeMetrics> episodes);

struct MatchRatePoint {
  std::size_t step = 0;
  std::size_t episodes = 0;
  double oracle_rate = 0.0;
  std::optional<double> comparison_rate;
};

/// Per-step agreement across episodes between actions and the oracle (and
/// optionally a second policy) recomputed on the visited states.
std::vector<MatchRatePoint> match_rate_by_step(std::span<const Trajectory> trajs, const PolicySpec& oracle,
                                               const std::optional<PolicySpec>& comparison = std::nullopt);

}  // namespace metabandit
