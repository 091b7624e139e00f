#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "metabandit/analytics.hpp"

namespace metabandit {

/// One (environment, policy) cell group of the summary table.
struct TableRow {
  std::string env;
  std::string policy;
  AggregateReport report;
};

/// Summary table, one row per (env, policy). Columns:
///   env, policy, episodes, failed,
///   AvgReward@50, AvgReward@300, BestArmFreq@50, BestArmFreq@300,
///   GreedyFreq@50, GreedyFreq@300, SuffixFail@50, SuffixFail@150,
///   Regret@50, Regret@300
/// Rewards and regret are episode means; frequencies are percentages.
/// Cells the episodes never reached are left empty.
void write_table_csv(std::ostream& out, std::span<const TableRow> rows);

/// One row per episode, columns "<metric>@<t>" for every checkpoint present
/// in any episode.
void write_episode_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> episodes);

/// Box statistics for every aggregated metric, suffix-failure frequencies
/// and the caller's identifying fields.
void write_summary_json(std::ostream& out, const TableRow& row, const std::string& trajectory_digest);

/// step, episodes, oracle_rate[, comparison_rate]
void write_match_rate_csv(std::ostream& out, std::span<const MatchRatePoint> points);

}  // namespace metabandit
