#include "metabandit/env.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "metabandit/errors.hpp"

using namespace metabandit;

TEST(ParseFamilySpec, GaussianMeanNormal) {
  const auto s = parse_family_spec("Gaussian5_Var1_MeanN0");
  EXPECT_EQ(s.family, EnvFamily::GaussianMeanNormal);
  EXPECT_EQ(s.k, 5u);
  EXPECT_EQ(s.sigma2, 1.0);
  EXPECT_EQ(s.mean_m, 0.0);
  EXPECT_EQ(s.canonical_name, "Gaussian5_Var1_MeanN0");
}

TEST(ParseFamilySpec, BernoulliDelta) {
  const auto s = parse_family_spec("Bernoulli5_Delta0.2");
  EXPECT_EQ(s.family, EnvFamily::BernoulliDelta);
  EXPECT_EQ(s.k, 5u);
  EXPECT_DOUBLE_EQ(s.delta, 0.2);
  EXPECT_DOUBLE_EQ(s.delta_top_mean(), 0.6);
}

TEST(ParseFamilySpec, OtherFamiliesAndNormalization) {
  EXPECT_EQ(parse_family_spec("Gaussian3_Var0.5_MeanU").family, EnvFamily::GaussianMeanUniform);
  EXPECT_EQ(parse_family_spec("Bernoulli10_Uniform").k, 10u);
  const auto shifted = parse_family_spec("Gaussian5_Var1_MeanN-1");
  EXPECT_EQ(shifted.mean_m, -1.0);
  EXPECT_EQ(parse_family_spec("Gaussian5_Var1.0_MeanN+1").canonical_name, "Gaussian5_Var1_MeanN1");
  for (const char* name : {"Gaussian5_Var1_MeanN0", "Gaussian5_Var0.25_MeanU", "Bernoulli3_Uniform",
                           "Bernoulli5_Delta0.05", "Gaussian4_Var2_MeanN-1"}) {
    const auto spec = parse_family_spec(name);
    EXPECT_EQ(spec.canonical_name, name);
    EXPECT_EQ(parse_family_spec(spec.canonical_name).canonical_name, spec.canonical_name);
  }
}

TEST(ParseFamilySpec, RejectsMalformedNamesNamingTheToken) {
  try {
    parse_family_spec("Gaussian5_Var1_MeanQ");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("MeanQ"), std::string::npos) << e.what();
  }
  for (const char* bad : {"", "Gaussian", "Gaussian0_Var1_MeanN0", "Gaussian5_Var0_MeanN0", "Gaussian5_Var-1_MeanU",
                          "Bernoulli5_Delta1.5", "Bernoulli5_Delta0", "Poisson5_Uniform", "Bernoulli5_Uniform_extra",
                          "Gaussian5_Var1_MeanNx", "Bernoullix_Uniform"}) {
    EXPECT_THROW(parse_family_spec(bad), ParseError) << bad;
  }
}

TEST(SampleInstance, DeltaConstruction) {
  const auto spec = parse_family_spec("Bernoulli5_Delta0.2");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream rng(seed);
    const auto inst = sample_instance(spec, rng);
    ASSERT_EQ(inst.k(), 5u);
    const auto& mu = inst.true_means();
    EXPECT_EQ(std::count(mu.begin(), mu.end(), 0.6), 1);
    EXPECT_EQ(std::count_if(mu.begin(), mu.end(), [](double m) { return std::fabs(m - 0.4) < 1e-15; }), 4);
    EXPECT_NEAR(inst.delta_max(), 0.2, 1e-15);
    EXPECT_DOUBLE_EQ(mu[inst.optimal_arm()], 0.6);
  }
}

TEST(SampleInstance, DeltaTopMeanIsConfigurable) {
  auto spec = parse_family_spec("Bernoulli2_Delta0.5");
  spec.top_mean = 0.9;
  RngStream rng(1);
  const auto inst = sample_instance(spec, rng);
  EXPECT_DOUBLE_EQ(inst.mu_star(), 0.9);
  EXPECT_DOUBLE_EQ(inst.mu_min(), 0.4);
}

TEST(SampleInstance, GapInvariantsHoldForEveryFamily) {
  for (const char* name : {"Gaussian5_Var1_MeanN0", "Gaussian5_Var3_MeanN1", "Gaussian4_Var1_MeanU",
                           "Bernoulli6_Uniform", "Bernoulli5_Delta0.1"}) {
    const auto spec = parse_family_spec(name);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      RngStream rng(seed);
      const auto inst = sample_instance(spec, rng);
      const auto& mu = inst.true_means();
      EXPECT_EQ(inst.mu_star(), *std::max_element(mu.begin(), mu.end()));
      EXPECT_EQ(inst.mu_min(), *std::min_element(mu.begin(), mu.end()));
      EXPECT_GE(inst.delta_max(), 0.0);
      EXPECT_EQ(inst.optimal_arm(), static_cast<std::size_t>(std::max_element(mu.begin(), mu.end()) - mu.begin()));
      if (spec.family == EnvFamily::GaussianMeanUniform || spec.family == EnvFamily::BernoulliUniform) {
        for (double m : mu) {
          EXPECT_GE(m, 0.0);
          EXPECT_LE(m, 1.0);
        }
      }
    }
  }
}

TEST(SampleInstance, SameSeedSameMeans) {
  const auto spec = parse_family_spec("Gaussian5_Var1_MeanN0");
  RngStream a(123), b(123);
  EXPECT_EQ(sample_instance(spec, a).true_means(), sample_instance(spec, b).true_means());
}

TEST(SampleInstance, MeanNormalSpreadFollowsSigma2) {
  const auto spec = parse_family_spec("Gaussian1_Var4_MeanN2");
  double s = 0, s2 = 0;
  constexpr int n = 40000;
  for (int i = 0; i < n; ++i) {
    RngStream rng(static_cast<std::uint64_t>(i));
    const double m = sample_instance(spec, rng).true_means()[0];
    s += m;
    s2 += m * m;
  }
  EXPECT_NEAR(s / n, 2.0, 0.05);
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 4.0, 0.15);
}

TEST(BanditInstance, OptimalArmTieBreaksLow) {
  const BanditInstance inst({BernoulliReward{0.3}, BernoulliReward{0.7}, BernoulliReward{0.7}});
  EXPECT_EQ(inst.optimal_arm(), 1u);
}

TEST(BanditInstance, RejectsInvalidArms) {
  EXPECT_THROW(BanditInstance({GaussianReward{0.0, 0.0}}), std::invalid_argument);
  EXPECT_THROW(BanditInstance({BernoulliReward{1.5}}), std::invalid_argument);
  EXPECT_THROW(BanditInstance(std::vector<ArmDistribution>{}), std::invalid_argument);
}

TEST(Pull, DegenerateBernoulli) {
  const BanditInstance inst({BernoulliReward{1.0}, BernoulliReward{0.0}});
  RngStream rng(0);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(pull(inst, 0, rng), 1.0);
    EXPECT_EQ(pull(inst, 1, rng), 0.0);
  }
}

TEST(Pull, GaussianLawOfLargeNumbers) {
  const BanditInstance inst({GaussianReward{0.0, 1.0}});
  RngStream rng(2024);
  constexpr int n = 1000000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += pull(inst, 0, rng);
  // 3-sigma band is 0.003; the contract asks for 0.01.
  EXPECT_NEAR(s / n, 0.0, 0.003);
}

TEST(Pull, BernoulliFrequencyWithinThreeSigma) {
  const BanditInstance inst({BernoulliReward{0.3}});
  RngStream rng(17);
  constexpr int n = 1000000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += pull(inst, 0, rng);
  EXPECT_NEAR(s / n, 0.3, 3 * std::sqrt(0.3 * 0.7 / n));
}

TEST(Pull, OutOfRangeArmThrows) {
  const BanditInstance inst({BernoulliReward{0.5}});
  RngStream rng(0);
  EXPECT_THROW(pull(inst, 1, rng), std::out_of_range);
  EXPECT_THROW(immediate_regret(inst, 3), std::out_of_range);
}

TEST(ImmediateRegret, Definition) {
  const BanditInstance two({GaussianReward{0.2, 1.0}, GaussianReward{0.8, 1.0}});
  EXPECT_NEAR(immediate_regret(two, 0), 0.6, 1e-15);
  EXPECT_EQ(immediate_regret(two, two.optimal_arm()), 0.0);
  const BanditInstance flat({BernoulliReward{0.5}, BernoulliReward{0.5}, BernoulliReward{0.5}});
  for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(immediate_regret(flat, a), 0.0);
}
