#include "metabandit/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "metabandit/errors.hpp"
#include "metabandit/text_format.hpp"

namespace metabandit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_arm(const SummaryState& state, std::size_t arm) {
  if (arm >= state.k()) throw std::out_of_range("arm index " + std::to_string(arm) + " out of range");
}

template <typename Bonus>
std::vector<double> bonus_scores(const SummaryState& state, double c, Bonus bonus) {
  std::vector<double> scores(state.k());
  for (std::size_t a = 0; a < state.k(); ++a) {
    const auto n = state.pulls(a);
    scores[a] = n == 0 ? kInf : state.mean_values()[a] + c * bonus(static_cast<double>(n));
  }
  return scores;
}

PolicyDecision from_scores(const SummaryState& state, std::vector<double> scores) {
  PolicyDecision d;
  d.arm = argmax_lowest(scores);
  d.explored = greedy_status(state, d.arm) == GreedyStatus::NonGreedy;
  d.scores = std::move(scores);
  return d;
}

}  // namespace

SummaryState::SummaryState(std::size_t k) : pulls_(k, 0), means_(k, 0.0) {
  if (k == 0) throw std::invalid_argument("summary state needs at least one arm");
}

SummaryState::SummaryState(std::vector<std::uint64_t> pulls, std::vector<double> means)
    : pulls_(std::move(pulls)), means_(std::move(means)) {
  if (pulls_.empty()) throw std::invalid_argument("summary state needs at least one arm");
  if (pulls_.size() != means_.size()) throw std::invalid_argument("pulls and means differ in length");
  for (std::size_t a = 0; a < pulls_.size(); ++a) {
    if (pulls_[a] == 0) {
      means_[a] = 0.0;
    } else if (!std::isfinite(means_[a])) {
      throw std::invalid_argument("non-finite mean for arm " + std::to_string(a));
    }
    total_ += pulls_[a];
  }
}

std::optional<double> SummaryState::mean(std::size_t arm) const {
  if (pulls_.at(arm) == 0) return std::nullopt;
  return means_[arm];
}

bool SummaryState::any_unpulled() const noexcept {
  return std::find(pulls_.begin(), pulls_.end(), 0u) != pulls_.end();
}

void SummaryState::record(std::size_t arm, double reward) {
  if (arm >= pulls_.size()) throw std::out_of_range("arm index " + std::to_string(arm) + " out of range");
  const auto n = ++pulls_[arm];
  means_[arm] += (reward - means_[arm]) / static_cast<double>(n);
  ++total_;
}

SummaryState update_state(SummaryState state, std::size_t arm, double reward) {
  state.record(arm, reward);
  return state;
}

GreedyStatus greedy_status(const SummaryState& state, std::size_t arm) {
  check_arm(state, arm);
  if (state.all_unpulled()) return GreedyStatus::Undefined;
  if (state.pulls(arm) == 0) return GreedyStatus::NonGreedy;
  double best = -kInf;
  for (std::size_t a = 0; a < state.k(); ++a) {
    if (state.pulls(a) > 0) best = std::max(best, state.mean_values()[a]);
  }
  return state.mean_values()[arm] < best ? GreedyStatus::NonGreedy : GreedyStatus::Greedy;
}

std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> ucb_scores(const SummaryState& state, double c) {
  const double log_t = state.total_pulls() > 0 ? std::log(static_cast<double>(state.total_pulls())) : 0.0;
  return bonus_scores(state, c, [log_t](double n) { return std::sqrt(log_t / n); });
}

std::vector<double> ucb_var_log_scores(const SummaryState& state, double c) {
  return bonus_scores(state, c, [](double n) { return std::sqrt(std::log(n + 1.0) / n); });
}

std::vector<double> ucb_var_invsqrt_scores(const SummaryState& state, double c) {
  return bonus_scores(state, c, [](double n) { return 1.0 / std::sqrt(n); });
}

PolicyDecision ucb_decide(const SummaryState& state, double c) {
  return from_scores(state, ucb_scores(state, c));
}

PolicyDecision ucb_var_log_decide(const SummaryState& state, double c) {
  return from_scores(state, ucb_var_log_scores(state, c));
}

PolicyDecision ucb_var_invsqrt_decide(const SummaryState& state, double c) {
  return from_scores(state, ucb_var_invsqrt_scores(state, c));
}

PolicyDecision greedy_decide(const SummaryState& state) {
  PolicyDecision d;
  const auto counts = state.pull_counts();
  if (const auto it = std::find(counts.begin(), counts.end(), 0u); it != counts.end()) {
    d.arm = static_cast<std::size_t>(it - counts.begin());
  } else {
    d.arm = argmax_lowest(state.mean_values());
  }
  d.explored = greedy_status(state, d.arm) == GreedyStatus::NonGreedy;
  return d;
}

PolicyDecision eps_greedy_decide(const SummaryState& state, double eps, RngStream& rng) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("epsilon must lie in [0, 1], got " + shortest(eps));
  if (eps > 0.0 && rng.uniform01() < eps) {
    PolicyDecision d;
    d.arm = static_cast<std::size_t>(rng.uniform_index(state.k()));
    d.explored = greedy_status(state, d.arm) == GreedyStatus::NonGreedy;
    return d;
  }
  return greedy_decide(state);
}

PolicyDecision ts_decide(const SummaryState& state, const TsPrior& prior, RngStream& rng) {
  std::vector<double> samples(state.k());
  for (std::size_t a = 0; a < state.k(); ++a) {
    const auto n = static_cast<double>(state.pulls(a));
    const double q = state.mean_values()[a];
    if (const auto* b = std::get_if<BetaPrior>(&prior)) {
      const double successes = std::clamp(std::round(q * n), 0.0, n);
      samples[a] = rng.beta(b->alpha + successes, b->beta + n - successes);
    } else {
      const auto& g = std::get<NormalPrior>(prior);
      const double precision = 1.0 / g.variance + n / g.obs_variance;
      const double mean = (g.mean / g.variance + n * q / g.obs_variance) / precision;
      samples[a] = rng.normal(mean, std::sqrt(1.0 / precision));
    }
  }
  return from_scores(state, std::move(samples));
}

PolicySpec parse_policy_spec(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  PolicySpec spec;
  if (name == "ucb") {
    spec.kind = PolicyKind::Ucb;
  } else if (name == "ts") {
    spec.kind = PolicyKind::Ts;
  } else if (name == "eps_greedy") {
    spec.kind = PolicyKind::EpsGreedy;
  } else if (name == "greedy") {
    spec.kind = PolicyKind::Greedy;
    spec.eps = 0.0;
  } else if (name == "ucb_var_log") {
    spec.kind = PolicyKind::UcbVarLog;
  } else if (name == "ucb_var_invsqrt") {
    spec.kind = PolicyKind::UcbVarInvSqrt;
  } else {
    throw ParseError("unknown policy '" + std::string(name) + "'");
  }

  std::string_view params = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  while (!params.empty()) {
    const auto comma = params.find(',');
    const std::string_view item = params.substr(0, comma);
    params = comma == std::string_view::npos ? std::string_view{} : params.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ParseError("policy parameter '" + std::string(item) + "' lacks '='");
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);

    auto number = [&]() {
      const auto v = parse_real(value);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("policy parameter '" + std::string(key) + "' has bad value '" + std::string(value) + "'");
      }
      return *v;
    };
    const bool is_ucb = spec.kind == PolicyKind::Ucb || spec.kind == PolicyKind::UcbVarLog ||
                        spec.kind == PolicyKind::UcbVarInvSqrt;
    if (is_ucb && (key == "C" || key == "c")) {
      spec.c = number();
    } else if (spec.kind == PolicyKind::EpsGreedy && key == "eps") {
      spec.eps = number();
      if (spec.eps < 0.0 || spec.eps > 1.0) throw ParseError("eps must lie in [0, 1]");
    } else if (spec.kind == PolicyKind::Ts && key == "prior") {
      if (value == "beta") {
        spec.prior = PolicySpec::PriorChoice::Beta;
      } else if (value == "normal") {
        spec.prior = PolicySpec::PriorChoice::Normal;
      } else if (value == "auto") {
        spec.prior = PolicySpec::PriorChoice::Auto;
      } else {
        throw ParseError("unknown prior '" + std::string(value) + "'");
      }
    } else if (spec.kind == PolicyKind::Ts && key == "prior_mean") {
      spec.prior_mean = number();
    } else if (spec.kind == PolicyKind::Ts && key == "prior_var") {
      spec.prior_var = number();
      if (*spec.prior_var <= 0.0) throw ParseError("prior_var must be positive");
    } else if (spec.kind == PolicyKind::Ts && key == "obs_var") {
      spec.obs_var = number();
      if (*spec.obs_var <= 0.0) throw ParseError("obs_var must be positive");
    } else {
      throw ParseError("policy '" + std::string(name) + "' has no parameter '" + std::string(key) + "'");
    }
  }
  return spec;
}

std::string to_string(const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::Ucb:
      return "ucb:C=" + shortest(spec.c);
    case PolicyKind::UcbVarLog:
      return "ucb_var_log:C=" + shortest(spec.c);
    case PolicyKind::UcbVarInvSqrt:
      return "ucb_var_invsqrt:C=" + shortest(spec.c);
    case PolicyKind::Greedy:
      return "greedy";
    case PolicyKind::EpsGreedy:
      return "eps_greedy:eps=" + shortest(spec.eps);
    case PolicyKind::Ts: {
      std::string out = "ts";
      std::vector<std::string> params;
      if (spec.prior == PolicySpec::PriorChoice::Beta) params.emplace_back("prior=beta");
      if (spec.prior == PolicySpec::PriorChoice::Normal) params.emplace_back("prior=normal");
      if (spec.prior_mean) params.push_back("prior_mean=" + shortest(*spec.prior_mean));
      if (spec.prior_var) params.push_back("prior_var=" + shortest(*spec.prior_var));
      if (spec.obs_var) params.push_back("obs_var=" + shortest(*spec.obs_var));
      for (std::size_t i = 0; i < params.size(); ++i) out += (i == 0 ? ":" : ",") + params[i];
      return out;
    }
  }
  return {};
}

TsPrior matched_prior(const EnvFamilySpec& env, const PolicySpec& spec) {
  using Choice = PolicySpec::PriorChoice;
  if (!env.is_gaussian()) {
    if (spec.prior == Choice::Normal) {
      throw ConfigError("Normal Thompson prior does not match Bernoulli environment " + env.canonical_name);
    }
    return BetaPrior{};
  }
  if (spec.prior == Choice::Beta) {
    throw ConfigError("Beta Thompson prior does not match Gaussian environment " + env.canonical_name);
  }
  NormalPrior p;
  if (env.family == EnvFamily::GaussianMeanNormal) {
    p.mean = env.mean_m;
    p.variance = env.sigma2;
  } else {
    p.mean = 0.5;
    p.variance = 1.0 / 12.0;
  }
  p.obs_variance = env.sigma2;
  if (spec.prior_mean) p.mean = *spec.prior_mean;
  if (spec.prior_var) p.variance = *spec.prior_var;
  if (spec.obs_var) p.obs_variance = *spec.obs_var;
  return p;
}

Policy::Policy(PolicySpec spec, const EnvFamilySpec* env) : spec_(std::move(spec)) {
  if (spec_.kind != PolicyKind::Ts) return;
  using Choice = PolicySpec::PriorChoice;
  if (env != nullptr) {
    prior_ = matched_prior(*env, spec_);
  } else if (spec_.prior == Choice::Beta) {
    prior_ = BetaPrior{};
  } else if (spec_.prior == Choice::Normal) {
    prior_ = NormalPrior{spec_.prior_mean.value_or(0.0), spec_.prior_var.value_or(1.0), spec_.obs_var.value_or(1.0)};
  } else {
    throw ConfigError("Thompson Sampling with an automatic prior needs an environment");
  }
}

bool Policy::is_stochastic() const noexcept {
  return spec_.kind == PolicyKind::Ts || (spec_.kind == PolicyKind::EpsGreedy && spec_.eps > 0.0);
}

PolicyDecision Policy::decide(const SummaryState& state, RngStream& rng) const {
  switch (spec_.kind) {
    case PolicyKind::Ucb:
      return ucb_decide(state, spec_.c);
    case PolicyKind::UcbVarLog:
      return ucb_var_log_decide(state, spec_.c);
    case PolicyKind::UcbVarInvSqrt:
      return ucb_var_invsqrt_decide(state, spec_.c);
    case PolicyKind::Greedy:
      return greedy_decide(state);
    case PolicyKind::EpsGreedy:
      return eps_greedy_decide(state, spec_.eps, rng);
    case PolicyKind::Ts:
      return ts_decide(state, *prior_, rng);
  }
  return {};
}

}  // namespace metabandit
