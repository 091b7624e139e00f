#include "metabandit/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <regex>
#include <stdexcept>

#include "metabandit/text_format.hpp"

namespace metabandit {

namespace {

void require_reach(const Trajectory& traj, std::size_t t) {
  if (t > traj.transitions.size()) {
    throw std::out_of_range("trajectory has " + std::to_string(traj.transitions.size()) + " steps, asked for " +
                            std::to_string(t));
  }
}

template <class F>
double sum_true_means(const Trajectory& traj, std::size_t t, const AnalyticsOptions& opts, F&& per_step) {
  require_reach(traj, t);
  double sum = 0.0;
  for (std::size_t s = 0; s < t; ++s) {
    const auto& tr = traj.transitions[s];
    if (tr.action) {
      sum += per_step(traj.true_means.at(*tr.action));
    } else if (opts.worst_case_invalid) {
      sum += per_step(traj.mu_min());
    }
  }
  return sum;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) != std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

std::optional<std::string_view> think_span(std::string_view text) {
  const auto open = text.find("<think>");
  if (open == std::string_view::npos) return std::nullopt;
  const auto body = open + 7;
  const auto close = text.find("</think>", body);
  if (close == std::string_view::npos) return std::nullopt;
  return text.substr(body, close - body);
}

// "Arm 3..." or "For Arm 3..." at the start of a line; returns the index.
std::optional<std::size_t> leading_arm(std::string_view line) {
  line = trim(line);
  if (starts_with_ci(line, "for ")) line = trim(line.substr(4));
  if (!starts_with_ci(line, "arm")) return std::nullopt;
  line.remove_prefix(3);
  while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
  std::size_t n = 0;
  while (n < line.size() && n < 9 && std::isdigit(static_cast<unsigned char>(line[n]))) ++n;
  if (n == 0 || (n < line.size() && std::isdigit(static_cast<unsigned char>(line[n])))) return std::nullopt;
  return std::stoul(std::string(line.substr(0, n)));
}

std::map<std::size_t, double> running_fraction(const std::vector<bool>& flags, std::span<const std::size_t> at) {
  std::map<std::size_t, double> out;
  std::size_t hits = 0;
  std::size_t next = 0;
  std::vector<std::size_t> points(at.begin(), at.end());
  std::sort(points.begin(), points.end());
  for (std::size_t s = 0; s < flags.size() && next < points.size(); ++s) {
    hits += flags[s] ? 1 : 0;
    while (next < points.size() && points[next] == s + 1) {
      out[points[next]] = static_cast<double>(hits) / static_cast<double>(s + 1);
      ++next;
    }
  }
  return out;
}

}  // namespace

double cumulative_regret(const Trajectory& traj, std::size_t t, const AnalyticsOptions& opts) {
  const double mu_star = traj.mu_star();
  return sum_true_means(traj, t, opts, [mu_star](double mu) { return mu_star - mu; });
}

double time_avg_reward(const Trajectory& traj, std::size_t t, const AnalyticsOptions& opts) {
  if (t == 0) throw std::invalid_argument("average reward needs t >= 1");
  return sum_true_means(traj, t, opts, [](double mu) { return mu; }) / static_cast<double>(t);
}

double best_arm_freq(const Trajectory& traj, std::size_t t) {
  if (t == 0) throw std::invalid_argument("best arm frequency needs t >= 1");
  require_reach(traj, t);
  const auto hits = std::count_if(traj.transitions.begin(), traj.transitions.begin() + static_cast<std::ptrdiff_t>(t),
                                  [&](const Transition& tr) { return tr.action == traj.optimal_arm; });
  return static_cast<double>(hits) / static_cast<double>(t);
}

double greedy_freq(const Trajectory& traj, std::size_t t, const AnalyticsOptions& opts) {
  require_reach(traj, t);
  std::size_t rounds = 0;
  std::size_t greedy = 0;
  for (std::size_t s = 0; s < t; ++s) {
    const auto& tr = traj.transitions[s];
    if (tr.state_before.all_unpulled() && opts.cold_start == ColdStartRound::Excluded) continue;
    ++rounds;
    if (tr.action && greedy_status(tr.state_before, *tr.action) == GreedyStatus::Greedy) ++greedy;
  }
  return rounds == 0 ? 0.0 : static_cast<double>(greedy) / static_cast<double>(rounds);
}

bool suffix_failure(const Trajectory& traj, std::size_t t) {
  const std::size_t len = traj.transitions.size();
  if (t == 0 || t > len) {
    throw std::out_of_range("suffix start " + std::to_string(t) + " outside 1.." + std::to_string(len));
  }
  return std::none_of(traj.transitions.begin() + static_cast<std::ptrdiff_t>(t - 1), traj.transitions.end(),
                      [&](const Transition& tr) { return tr.action == traj.optimal_arm; });
}

std::vector<bool> match_flags(const Trajectory& traj, const PolicySpec& spec) {
  const Policy policy(spec, &traj.config.env);
  std::vector<bool> flags;
  flags.reserve(traj.transitions.size());
  for (const auto& tr : traj.transitions) {
    auto rng = oracle_step_rng(traj.config.seed, tr.step);
    flags.push_back(tr.action && *tr.action == policy.decide(tr.state_before, rng).arm);
  }
  return flags;
}

std::map<std::size_t, double> extract_claimed_ucb_values(std::string_view response, std::size_t k) {
  static const std::regex number(R"([-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)");
  std::map<std::size_t, double> claimed;
  const auto think = think_span(response);
  if (!think) return claimed;
  std::string_view rest = *think;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    const std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);

    const auto arm = leading_arm(line);
    if (!arm || *arm >= k) continue;
    const auto ucb = line.find("UCB");
    if (ucb == std::string_view::npos) continue;
    const std::string tail(line.substr(ucb + 3));
    std::optional<double> last;
    for (auto it = std::sregex_iterator(tail.begin(), tail.end(), number); it != std::sregex_iterator(); ++it) {
      last = parse_real(it->str());
    }
    if (last && std::isfinite(*last)) claimed[*arm] = *last;
  }
  return claimed;
}

std::optional<UcbValueDiff> ucb_value_abs_diff(const std::map<std::size_t, double>& claimed,
                                               const SummaryState& state, double c) {
  if (claimed.empty()) return std::nullopt;
  const auto truth = ucb_scores(state, c);
  UcbValueDiff out;
  double sum = 0.0;
  for (std::size_t a = 0; a < truth.size(); ++a) {
    const auto it = claimed.find(a);
    if (it == claimed.end() || !std::isfinite(truth[a])) {
      ++out.arms_excluded;
      continue;
    }
    sum += std::fabs(it->second - truth[a]);
    ++out.arms_used;
  }
  if (out.arms_used == 0) return std::nullopt;
  out.mean_abs_diff = sum / static_cast<double>(out.arms_used);
  return out;
}

std::optional<UcbValueDiff> ucb_value_abs_diff(std::string_view response, const SummaryState& state, double c) {
  return ucb_value_abs_diff(extract_claimed_ucb_values(response, state.k()), state, c);
}

EpisodeMetrics episode_metrics(const Trajectory& traj, const MetricsRequest& req) {
  EpisodeMetrics m;
  m.seed = traj.config.seed;
  m.length = traj.transitions.size();
  m.failed = traj.failure.has_value();
  for (const auto t : req.checkpoints) {
    if (t == 0 || t > m.length) continue;
    m.cum_regret[t] = cumulative_regret(traj, t, req.options);
    m.avg_reward[t] = time_avg_reward(traj, t, req.options);
    m.best_arm_freq[t] = best_arm_freq(traj, t);
    m.greedy_freq[t] = greedy_freq(traj, t, req.options);
    m.suffix_fail[t] = suffix_failure(traj, t);
  }
  if (req.oracle) m.match_rate = running_fraction(match_flags(traj, *req.oracle), req.checkpoints);
  if (req.ucb_c) {
    std::map<std::size_t, double> diffs;
    for (const auto& tr : traj.transitions) {
      if (!tr.response) continue;
      if (const auto d = ucb_value_abs_diff(*tr.response, tr.state_before, *req.ucb_c)) {
        diffs[tr.step] = d->mean_abs_diff;
      }
    }
    if (!diffs.empty()) m.ucb_abs_diff = std::move(diffs);
  }
  return m;
}

double quantile_linear(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box statistics of an empty sample");
  std::sort(values.begin(), values.end());
  BoxStats b;
  b.count = values.size();
  b.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  b.min = values.front();
  b.max = values.back();
  b.q25 = quantile_linear(values, 0.25);
  b.median = quantile_linear(values, 0.5);
  b.q75 = quantile_linear(values, 0.75);
  const double reach = 1.5 * (b.q75 - b.q25);
  b.whisker_low = *std::lower_bound(values.begin(), values.end(), b.q25 - reach);
  b.whisker_high = *std::prev(std::upper_bound(values.begin(), values.end(), b.q75 + reach));
  return b;
}

AggregateReport aggregate(std::span<const EpisodeMetrics> episodes) {
  if (episodes.empty()) throw std::invalid_argument("no episodes to aggregate");
  AggregateReport report;
  report.episodes = episodes.size();
  std::map<std::string, std::vector<double>> samples;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> suffix;  // t -> (failures, episodes)

  auto collect = [&](std::string_view name, const std::map<std::size_t, double>& by_t) {
    for (const auto& [t, v] : by_t) samples[std::string(name) + "@" + std::to_string(t)].push_back(v);
  };
  for (const auto& ep : episodes) {
    if (ep.failed) ++report.failed;
    collect("cum_regret", ep.cum_regret);
    collect("avg_reward", ep.avg_reward);
    collect("best_arm_freq", ep.best_arm_freq);
    collect("greedy_freq", ep.greedy_freq);
    if (ep.match_rate) collect("match_rate", *ep.match_rate);
    for (const auto& [t, failed] : ep.suffix_fail) {
      auto& [fails, total] = suffix[t];
      fails += failed ? 1 : 0;
      ++total;
    }
    if (ep.ucb_abs_diff) {
      double sum = 0.0;
      for (const auto& [step, d] : *ep.ucb_abs_diff) sum += d;
      samples["ucb_abs_diff"].push_back(sum / static_cast<double>(ep.ucb_abs_diff->size()));
    }
  }
  for (auto& [name, values] : samples) report.metrics.emplace(name, box_stats(std::move(values)));
  for (const auto& [t, counts] : suffix) {
    report.suffix_fail_freq[t] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return report;
}

std::vector<MatchRatePoint> match_rate_by_step(std::span<const Trajectory> trajs, const PolicySpec& oracle,
                                               const std::optional<PolicySpec>& comparison) {
  std::vector<MatchRatePoint> points;
  std::vector<std::size_t> oracle_hits;
  std::vector<std::size_t> comparison_hits;
  auto tally = [](std::vector<std::size_t>& hits, const std::vector<bool>& flags) {
    if (hits.size() < flags.size()) hits.resize(flags.size(), 0);
    for (std::size_t s = 0; s < flags.size(); ++s) hits[s] += flags[s] ? 1 : 0;
  };
  for (const auto& traj : trajs) {
    const auto n = traj.transitions.size();
    if (points.size() < n) points.resize(n);
    for (std::size_t s = 0; s < n; ++s) ++points[s].episodes;
    tally(oracle_hits, match_flags(traj, oracle));
    if (comparison) tally(comparison_hits, match_flags(traj, *comparison));
  }
  for (std::size_t s = 0; s < points.size(); ++s) {
    auto& p = points[s];
    p.step = s + 1;
    const auto denom = static_cast<double>(p.episodes);
    p.oracle_rate = static_cast<double>(oracle_hits[s]) / denom;
    if (comparison) p.comparison_rate = static_cast<double>(comparison_hits[s]) / denom;
  }
  return points;
}

}  // namespace metabandit
