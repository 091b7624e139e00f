#include "metabandit/rollout.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace metabandit {

namespace {

constexpr auto tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

}  // namespace

RngStream policy_step_rng(std::uint64_t episode_seed, std::size_t step) {
  return RngStream::child(episode_seed, {tag(StreamTag::Policy), step});
}

RngStream oracle_step_rng(std::uint64_t episode_seed, std::size_t step) {
  return RngStream::child(episode_seed, {tag(StreamTag::Oracle), step});
}

StepChoice PolicyDecider::choose(const SummaryState& state, const StepContext& ctx) {
  auto rng = policy_step_rng(ctx.episode_seed, ctx.step);
  return StepChoice{policy_.decide(state, rng).arm, std::nullopt, std::nullopt};
}

std::optional<double> Transition::shaped_value(RewardScheme scheme) const {
  for (const auto& [s, v] : shaped) {
    if (s == scheme) return v;
  }
  return std::nullopt;
}

double Trajectory::mu_star() const {
  return *std::max_element(true_means.begin(), true_means.end());
}

double Trajectory::mu_min() const {
  return *std::min_element(true_means.begin(), true_means.end());
}

BanditInstance episode_instance(const EnvFamilySpec& env, std::uint64_t episode_seed) {
  auto rng = RngStream::child(episode_seed, {tag(StreamTag::Instance)});
  return sample_instance(env, rng);
}

EpisodeRewards::EpisodeRewards(const BanditInstance& instance, std::uint64_t episode_seed)
    : instance_(&instance) {
  streams_.reserve(instance.k());
  for (std::size_t a = 0; a < instance.k(); ++a) {
    streams_.push_back(RngStream::child(episode_seed, {tag(StreamTag::Reward), a}));
  }
}

double EpisodeRewards::pull(std::size_t arm) {
  if (arm >= streams_.size()) throw std::out_of_range("arm index " + std::to_string(arm) + " out of range");
  return metabandit::pull(*instance_, arm, streams_[arm]);
}

Trajectory run_episode(Decider& decider, const EpisodeConfig& config) {
  if (config.horizon == 0) throw std::invalid_argument("horizon must be at least 1");
  const BanditInstance instance = episode_instance(config.env, config.seed);
  EpisodeRewards rewards(instance, config.seed);
  const Policy oracle(config.oracle, &config.env);

  Trajectory traj;
  traj.config = config;
  traj.decider = decider.label();
  traj.true_means = instance.true_means();
  traj.optimal_arm = instance.optimal_arm();
  traj.transitions.reserve(config.horizon);

  SummaryState state(instance.k());
  for (std::size_t t = 1; t <= config.horizon; ++t) {
    const StepContext ctx{config.seed, t, instance.k()};
    StepChoice choice;
    try {
      choice = decider.choose(state, ctx);
    } catch (const std::exception& e) {
      choice.failure = e.what();
    }
    if (choice.failure) {
      traj.failure = "step " + std::to_string(t) + ": " + *choice.failure;
      break;
    }

    Transition tr;
    tr.step = t;
    tr.state_before = state;
    auto oracle_rng = oracle_step_rng(config.seed, t);
    tr.oracle_arm = oracle.decide(state, oracle_rng).arm;
    if (choice.arm && *choice.arm < instance.k()) {
      tr.action = choice.arm;
      tr.valid = true;
      tr.raw_reward = rewards.pull(*choice.arm);
      tr.greedy = greedy_status(state, *choice.arm) == GreedyStatus::Greedy;
      tr.optimal = *choice.arm == instance.optimal_arm();
    } else {
      tr.valid = false;
    }
    const StepOutcome outcome{tr.raw_reward, tr.valid, tr.action, tr.oracle_arm};
    for (const auto scheme : config.reward_schemes) {
      tr.shaped.emplace_back(scheme, shaped_reward(scheme, instance, outcome, config.shaping));
    }
    if (config.record_responses) tr.response = std::move(choice.response);
    if (tr.action) state.record(*tr.action, tr.raw_reward);
    traj.transitions.push_back(std::move(tr));
  }
  return traj;
}

std::vector<Trajectory> run_batch(const DeciderFactory& factory, const EpisodeConfig& base,
                                  std::span<const std::uint64_t> seeds, std::size_t jobs) {
  if (seeds.empty()) throw std::invalid_argument("seed list is empty");
  std::vector<Trajectory> out(seeds.size());
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    std::unique_ptr<Decider> decider;
    try {
      decider = factory();
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      return;
    }
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      EpisodeConfig cfg = base;
      cfg.seed = seeds[i];
      out[i] = run_episode(*decider, cfg);
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

std::vector<std::uint64_t> canonical_seeds(std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
  return seeds;
}

}  // namespace metabandit
