#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "metabandit/env.hpp"
#include "metabandit/rng.hpp"

namespace metabandit {

/// Per-arm sufficient statistics of the interaction history: pull counts and
/// empirical means. This is the whole agent-visible observation.
class SummaryState {
 public:
  explicit SummaryState(std::size_t k);
  /// `means[a]` is ignored when `pulls[a] == 0`.
  SummaryState(std::vector<std::uint64_t> pulls, std::vector<double> means);

  std::size_t k() const noexcept { return pulls_.size(); }
  std::uint64_t pulls(std::size_t arm) const { return pulls_.at(arm); }
  /// Empirical mean, or nullopt while the arm is unpulled.
  std::optional<double> mean(std::size_t arm) const;
  std::uint64_t total_pulls() const noexcept { return total_; }
  bool any_unpulled() const noexcept;
  bool all_unpulled() const noexcept { return total_ == 0; }

  std::span<const std::uint64_t> pull_counts() const noexcept { return pulls_; }
  /// Raw storage; 0.0 for unpulled arms.
  std::span<const double> mean_values() const noexcept { return means_; }

  /// Incremental mean update. Throws std::out_of_range for a bad arm.
  void record(std::size_t arm, double reward);

  friend bool operator==(const SummaryState&, const SummaryState&) = default;

 private:
  std::vector<std::uint64_t> pulls_;
  std::vector<double> means_;
  std::uint64_t total_ = 0;
};

/// The summarizer: returns `state` with one more observation folded in.
SummaryState update_state(SummaryState state, std::size_t arm, double reward);

struct PolicyDecision {
  std::size_t arm = 0;
  std::optional<std::vector<double>> scores;
  /// Chosen arm lies outside the (tie-inclusive) greedy set.
  bool explored = false;
};

enum class GreedyStatus { Greedy, NonGreedy, Undefined };

/// Whether `arm` is a greedy choice in `state`. With some arms unpulled the
/// greedy set is the argmax over pulled arms; with none pulled it is
/// undefined.
GreedyStatus greedy_status(const SummaryState& state, std::size_t arm);

/// Lowest index attaining the maximum (+inf counts as a maximum).
std::size_t argmax_lowest(std::span<const double> values);

// UCB family. Unpulled arms always score +inf.
std::vector<double> ucb_scores(const SummaryState& state, double c);
std::vector<double> ucb_var_log_scores(const SummaryState& state, double c);
std::vector<double> ucb_var_invsqrt_scores(const SummaryState& state, double c);

/// Q + C * sqrt(ln t / N)
PolicyDecision ucb_decide(const SummaryState& state, double c);
/// Q + C * sqrt(ln(N + 1) / N)
PolicyDecision ucb_var_log_decide(const SummaryState& state, double c);
/// Q + C / sqrt(N)
PolicyDecision ucb_var_invsqrt_decide(const SummaryState& state, double c);

/// Round-robin over unpulled arms, then the lowest-index best mean.
PolicyDecision greedy_decide(const SummaryState& state);
/// Uniform arm with probability eps, greedy_decide otherwise. Throws
/// ConfigError for eps outside [0, 1]. eps == 0 draws nothing from `rng`.
PolicyDecision eps_greedy_decide(const SummaryState& state, double eps, RngStream& rng);

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;
};

/// Conjugate Normal prior on the arm mean with known observation variance.
struct NormalPrior {
  double mean = 0.0;
  double variance = 1.0;
  double obs_variance = 1.0;
};

using TsPrior = std::variant<BetaPrior, NormalPrior>;

/// One posterior draw per arm, argmax (lowest index on ties). Bernoulli
/// successes are recovered as round(Q * N).
PolicyDecision ts_decide(const SummaryState& state, const TsPrior& prior, RngStream& rng);

enum class PolicyKind { Ucb, Ts, EpsGreedy, Greedy, UcbVarLog, UcbVarInvSqrt };

/// Parsed policy identifier, e.g. `ucb:C=0.5`, `eps_greedy:eps=0.1`, `ts`,
/// `ts:prior=normal,obs_var=1`.
struct PolicySpec {
  PolicyKind kind = PolicyKind::Ucb;
  double c = 0.5;
  double eps = 0.1;
  enum class PriorChoice { Auto, Beta, Normal } prior = PriorChoice::Auto;
  std::optional<double> prior_mean;
  std::optional<double> prior_var;
  std::optional<double> obs_var;

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

PolicySpec parse_policy_spec(std::string_view text);
std::string to_string(const PolicySpec& spec);

/// A policy with its environment-dependent parameters resolved.
class Policy {
 public:
  /// `env` is needed only for Thompson Sampling's matched prior. Throws
  /// ConfigError on a prior/family mismatch.
  Policy(PolicySpec spec, const EnvFamilySpec* env);

  const PolicySpec& spec() const noexcept { return spec_; }
  const std::optional<TsPrior>& prior() const noexcept { return prior_; }
  bool is_stochastic() const noexcept;

  PolicyDecision decide(const SummaryState& state, RngStream& rng) const;

 private:
  PolicySpec spec_;
  std::optional<TsPrior> prior_;
};

/// The prior Thompson Sampling uses on `env` when the spec leaves it open:
/// Beta(1,1) for Bernoulli families, the environment's own mean distribution
/// (moment-matched for MeanU) with observation variance sigma2 for Gaussian
/// families.
TsPrior matched_prior(const EnvFamilySpec& env, const PolicySpec& spec);

}  // namespace metabandit
