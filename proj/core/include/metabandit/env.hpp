#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "metabandit/rng.hpp"

namespace metabandit {

struct GaussianReward {
  double mean = 0.0;
  double variance = 1.0;
};

struct BernoulliReward {
  double p = 0.5;
};

using ArmDistribution = std::variant<GaussianReward, BernoulliReward>;

double arm_mean(const ArmDistribution& arm) noexcept;

enum class EnvFamily {
  GaussianMeanNormal,   // Gaussian{k}_Var{s2}_MeanN{m}
  GaussianMeanUniform,  // Gaussian{k}_Var{s2}_MeanU
  BernoulliUniform,     // Bernoulli{k}_Uniform
  BernoulliDelta,       // Bernoulli{k}_Delta{d}
};

/// A family of K-armed problems. Fields that do not apply to `family` are
/// left at their defaults and ignored.
struct EnvFamilySpec {
  EnvFamily family = EnvFamily::GaussianMeanNormal;
  std::size_t k = 5;
  double sigma2 = 1.0;  // reward variance; also the variance of the arm means for MeanN
  double mean_m = 0.0;  // MeanN centre
  double delta = 0.0;   // Delta gap
  /// Mean of the best arm in the Delta family. Defaults to 0.5 + delta / 2.
  std::optional<double> top_mean;
  std::string canonical_name;

  bool is_gaussian() const noexcept {
    return family == EnvFamily::GaussianMeanNormal || family == EnvFamily::GaussianMeanUniform;
  }
  double delta_top_mean() const noexcept { return top_mean.value_or(0.5 + delta / 2.0); }
};

/// Parses one of
///   Gaussian{k}_Var{s2}_MeanN{m} | Gaussian{k}_Var{s2}_MeanU |
///   Bernoulli{k}_Uniform | Bernoulli{k}_Delta{d}
/// Throws ParseError naming the offending token.
EnvFamilySpec parse_family_spec(std::string_view name);

/// Normalized name: numbers in shortest round-trip form, no '+' signs.
std::string canonical_family_name(const EnvFamilySpec& spec);

/// A concrete K-armed problem. Immutable once built.
class BanditInstance {
 public:
  explicit BanditInstance(std::vector<ArmDistribution> arms);

  std::size_t k() const noexcept { return arms_.size(); }
  const std::vector<ArmDistribution>& arms() const noexcept { return arms_; }
  const std::vector<double>& true_means() const noexcept { return means_; }
  /// Lowest index attaining mu_star.
  std::size_t optimal_arm() const noexcept { return optimal_arm_; }
  double mu_star() const noexcept { return mu_star_; }
  double mu_min() const noexcept { return mu_min_; }
  double delta_max() const noexcept { return mu_star_ - mu_min_; }

 private:
  std::vector<ArmDistribution> arms_;
  std::vector<double> means_;
  std::size_t optimal_arm_ = 0;
  double mu_star_ = 0.0;
  double mu_min_ = 0.0;
};

BanditInstance sample_instance(const EnvFamilySpec& spec, RngStream& rng);

/// Stochastic reward of one pull. Throws std::out_of_range for a bad arm.
double pull(const BanditInstance& instance, std::size_t arm, RngStream& rng);

/// mu_star - mu_arm. Throws std::out_of_range for a bad arm.
double immediate_regret(const BanditInstance& instance, std::size_t arm);

}  // namespace metabandit
