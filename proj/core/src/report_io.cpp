#include "metabandit/report_io.hpp"

#include <cstdio>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "metabandit/text_format.hpp"

namespace metabandit {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string mean_cell(const AggregateReport& r, const std::string& key, double scale, int digits) {
  const auto it = r.metrics.find(key);
  return it == r.metrics.end() ? std::string() : fixed(it->second.mean * scale, digits);
}

nlohmann::ordered_json box_json(const BoxStats& b) {
  return {{"count", b.count},   {"mean", b.mean}, {"min", b.min},
          {"q25", b.q25},       {"median", b.median}, {"q75", b.q75},
          {"max", b.max},       {"whisker_low", b.whisker_low}, {"whisker_high", b.whisker_high}};
}

}  // namespace

void write_table_csv(std::ostream& out, std::span<const TableRow> rows) {
  out << "env,policy,episodes,failed,AvgReward@50,AvgReward@300,BestArmFreq@50,BestArmFreq@300,"
         "GreedyFreq@50,GreedyFreq@300,SuffixFail@50,SuffixFail@150,Regret@50,Regret@300\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    auto suffix = [&](std::size_t t) {
      const auto it = r.suffix_fail_freq.find(t);
      return it == r.suffix_fail_freq.end() ? std::string() : fixed(100.0 * it->second, 1);
    };
    out << csv_field(row.env) << ',' << csv_field(row.policy) << ',' << r.episodes << ',' << r.failed << ','
        << mean_cell(r, "avg_reward@50", 1.0, 4) << ',' << mean_cell(r, "avg_reward@300", 1.0, 4) << ','
        << mean_cell(r, "best_arm_freq@50", 100.0, 1) << ',' << mean_cell(r, "best_arm_freq@300", 100.0, 1) << ','
        << mean_cell(r, "greedy_freq@50", 100.0, 1) << ',' << mean_cell(r, "greedy_freq@300", 100.0, 1) << ','
        << suffix(50) << ',' << suffix(150) << ',' << mean_cell(r, "cum_regret@50", 1.0, 4) << ','
        << mean_cell(r, "cum_regret@300", 1.0, 4) << '\n';
  }
}

void write_episode_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> episodes) {
  std::set<std::size_t> checkpoints;
  bool any_match = false;
  for (const auto& ep : episodes) {
    for (const auto& [t, v] : ep.cum_regret) checkpoints.insert(t);
    any_match = any_match || ep.match_rate.has_value();
  }
  out << "seed,length,failed";
  for (const auto t : checkpoints) {
    const auto s = std::to_string(t);
    out << ",cum_regret@" << s << ",avg_reward@" << s << ",best_arm_freq@" << s << ",greedy_freq@" << s
        << ",suffix_fail@" << s;
    if (any_match) out << ",match_rate@" << s;
  }
  out << '\n';
  auto cell = [](const std::map<std::size_t, double>& m, std::size_t t) {
    const auto it = m.find(t);
    return it == m.end() ? std::string() : shortest(it->second);
  };
  for (const auto& ep : episodes) {
    out << ep.seed << ',' << ep.length << ',' << (ep.failed ? 1 : 0);
    for (const auto t : checkpoints) {
      const auto sf = ep.suffix_fail.find(t);
      out << ',' << cell(ep.cum_regret, t) << ',' << cell(ep.avg_reward, t) << ',' << cell(ep.best_arm_freq, t) << ','
          << cell(ep.greedy_freq, t) << ',' << (sf == ep.suffix_fail.end() ? "" : (sf->second ? "1" : "0"));
      if (any_match) out << ',' << (ep.match_rate ? cell(*ep.match_rate, t) : std::string());
    }
    out << '\n';
  }
}

void write_summary_json(std::ostream& out, const TableRow& row, const std::string& trajectory_digest) {
  nlohmann::ordered_json j;
  j["env"] = row.env;
  j["policy"] = row.policy;
  j["episodes"] = row.report.episodes;
  j["failed"] = row.report.failed;
  j["trajectory_sha256"] = trajectory_digest;
  auto& metrics = j["metrics"];
  metrics = nlohmann::ordered_json::object();
  for (const auto& [name, box] : row.report.metrics) metrics[name] = box_json(box);
  auto& suffix = j["suffix_fail_freq"];
  suffix = nlohmann::ordered_json::object();
  for (const auto& [t, f] : row.report.suffix_fail_freq) suffix[std::to_string(t)] = f;
  out << j.dump(2) << '\n';
}

void write_match_rate_csv(std::ostream& out, std::span<const MatchRatePoint> points) {
  const bool comparison = !points.empty() && points.front().comparison_rate.has_value();
  out << "step,episodes,oracle_rate" << (comparison ? ",comparison_rate" : "") << '\n';
  for (const auto& p : points) {
    out << p.step << ',' << p.episodes << ',' << shortest(p.oracle_rate);
    if (comparison) out << ',' << shortest(p.comparison_rate.value_or(0.0));
    out << '\n';
  }
}

}  // namespace metabandit
