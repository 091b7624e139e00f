#include "metabandit/env.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "metabandit/errors.hpp"
#include "metabandit/text_format.hpp"

namespace metabandit {

namespace {

[[noreturn]] void fail(std::string_view name, std::string_view token, std::string_view why) {
  throw ParseError("bad environment '" + std::string(name) + "': " + std::string(why) +
                   " at '" + std::string(token) + "'");
}

// Consumes a leading run of decimal digits as the arm count.
std::size_t take_arm_count(std::string_view name, std::string_view& rest) {
  std::size_t n = 0;
  while (n < rest.size() && std::isdigit(static_cast<unsigned char>(rest[n]))) ++n;
  if (n == 0 || n > 6) fail(name, rest.substr(0, rest.find('_')), "expected arm count");
  const std::size_t k = std::stoul(std::string(rest.substr(0, n)));
  if (k == 0) fail(name, rest.substr(0, n), "arm count must be positive");
  rest.remove_prefix(n);
  return k;
}

bool looks_numeric(std::string_view s) {
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
  return !s.empty() && (std::isdigit(static_cast<unsigned char>(s.front())) || s.front() == '.');
}

double take_number(std::string_view name, std::string_view token, std::string_view what) {
  if (!looks_numeric(token)) fail(name, token, "expected " + std::string(what));
  const auto v = parse_real(token);
  if (!v || !std::isfinite(*v)) fail(name, token, "expected " + std::string(what));
  return *v;
}

bool consume(std::string_view& rest, std::string_view prefix) {
  if (rest.substr(0, prefix.size()) != prefix) return false;
  rest.remove_prefix(prefix.size());
  return true;
}

}  // namespace

double arm_mean(const ArmDistribution& arm) noexcept {
  return std::visit(
      [](const auto& a) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, GaussianReward>) {
          return a.mean;
        } else {
          return a.p;
        }
      },
      arm);
}

EnvFamilySpec parse_family_spec(std::string_view name) {
  EnvFamilySpec spec;
  std::string_view rest = name;

  if (consume(rest, "Gaussian")) {
    spec.k = take_arm_count(name, rest);
    if (!consume(rest, "_Var")) fail(name, rest, "expected '_Var'");
    const auto us = rest.find('_');
    if (us == std::string_view::npos) fail(name, rest, "expected '_MeanN' or '_MeanU'");
    spec.sigma2 = take_number(name, rest.substr(0, us), "variance");
    if (spec.sigma2 <= 0.0) fail(name, rest.substr(0, us), "variance must be positive");
    rest.remove_prefix(us);
    if (consume(rest, "_MeanN")) {
      spec.family = EnvFamily::GaussianMeanNormal;
      spec.mean_m = take_number(name, rest, "mean centre");
    } else if (rest == "_MeanU") {
      spec.family = EnvFamily::GaussianMeanUniform;
    } else {
      fail(name, rest, "expected '_MeanN{m}' or '_MeanU'");
    }
  } else if (consume(rest, "Bernoulli")) {
    spec.k = take_arm_count(name, rest);
    if (rest == "_Uniform") {
      spec.family = EnvFamily::BernoulliUniform;
    } else if (consume(rest, "_Delta")) {
      spec.family = EnvFamily::BernoulliDelta;
      spec.delta = take_number(name, rest, "gap");
      if (!(spec.delta > 0.0 && spec.delta < 1.0)) fail(name, rest, "gap must lie in (0, 1)");
    } else {
      fail(name, rest, "expected '_Uniform' or '_Delta{d}'");
    }
  } else {
    fail(name, name.substr(0, name.find_first_of("0123456789_")), "unknown family");
  }

  spec.canonical_name = canonical_family_name(spec);
  return spec;
}

std::string canonical_family_name(const EnvFamilySpec& spec) {
  const std::string k = std::to_string(spec.k);
  switch (spec.family) {
    case EnvFamily::GaussianMeanNormal:
      return "Gaussian" + k + "_Var" + shortest(spec.sigma2) + "_MeanN" + shortest(spec.mean_m + 0.0);
    case EnvFamily::GaussianMeanUniform:
      return "Gaussian" + k + "_Var" + shortest(spec.sigma2) + "_MeanU";
    case EnvFamily::BernoulliUniform:
      return "Bernoulli" + k + "_Uniform";
    case EnvFamily::BernoulliDelta:
      return "Bernoulli" + k + "_Delta" + shortest(spec.delta);
  }
  return {};
}

BanditInstance::BanditInstance(std::vector<ArmDistribution> arms) : arms_(std::move(arms)) {
  if (arms_.empty()) throw std::invalid_argument("bandit instance needs at least one arm");
  means_.reserve(arms_.size());
  for (const auto& arm : arms_) {
    if (const auto* g = std::get_if<GaussianReward>(&arm); g && !(g->variance > 0.0)) {
      throw std::invalid_argument("Gaussian arm variance must be positive");
    }
    if (const auto* b = std::get_if<BernoulliReward>(&arm); b && !(b->p >= 0.0 && b->p <= 1.0)) {
      throw std::invalid_argument("Bernoulli arm p must lie in [0, 1]");
    }
    means_.push_back(arm_mean(arm));
  }
  optimal_arm_ = static_cast<std::size_t>(std::max_element(means_.begin(), means_.end()) - means_.begin());
  mu_star_ = means_[optimal_arm_];
  mu_min_ = *std::min_element(means_.begin(), means_.end());
}

BanditInstance sample_instance(const EnvFamilySpec& spec, RngStream& rng) {
  std::vector<ArmDistribution> arms;
  arms.reserve(spec.k);
  switch (spec.family) {
    case EnvFamily::GaussianMeanNormal: {
      const double sd = std::sqrt(spec.sigma2);
      for (std::size_t i = 0; i < spec.k; ++i) {
        arms.emplace_back(GaussianReward{rng.normal(spec.mean_m, sd), spec.sigma2});
      }
      break;
    }
    case EnvFamily::GaussianMeanUniform:
      for (std::size_t i = 0; i < spec.k; ++i) {
        arms.emplace_back(GaussianReward{rng.uniform01(), spec.sigma2});
      }
      break;
    case EnvFamily::BernoulliUniform:
      for (std::size_t i = 0; i < spec.k; ++i) arms.emplace_back(BernoulliReward{rng.uniform01()});
      break;
    case EnvFamily::BernoulliDelta: {
      const double p = spec.delta_top_mean();
      if (p > 1.0 || p - spec.delta < 0.0) {
        throw ConfigError("Delta family top mean " + shortest(p) + " leaves arms outside [0, 1]");
      }
      const auto best = rng.uniform_index(spec.k);
      for (std::size_t i = 0; i < spec.k; ++i) {
        arms.emplace_back(BernoulliReward{i == best ? p : p - spec.delta});
      }
      break;
    }
  }
  return BanditInstance(std::move(arms));
}

double pull(const BanditInstance& instance, std::size_t arm, RngStream& rng) {
  if (arm >= instance.k()) throw std::out_of_range("arm index " + std::to_string(arm) + " out of range");
  return std::visit(
      [&rng](const auto& a) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, GaussianReward>) {
          return rng.normal(a.mean, std::sqrt(a.variance));
        } else {
          return rng.bernoulli(a.p) ? 1.0 : 0.0;
        }
      },
      instance.arms()[arm]);
}

double immediate_regret(const BanditInstance& instance, std::size_t arm) {
  if (arm >= instance.k()) throw std::out_of_range("arm index " + std::to_string(arm) + " out of range");
  return instance.mu_star() - instance.true_means()[arm];
}

}  // namespace metabandit
