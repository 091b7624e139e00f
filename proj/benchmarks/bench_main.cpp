#include <benchmark/benchmark.h>

#include <random>

#include "metabandit/advantage.hpp"
#include "metabandit/agent_protocol.hpp"
#include "metabandit/policies.hpp"
#include "metabandit/rollout.hpp"

using namespace metabandit;

namespace {

EpisodeRecord make_episode(std::size_t turns, std::size_t tokens) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> x;
  EpisodeRecord ep;
  ep.turns.resize(turns);
  for (auto& t : ep.turns) {
    t.values.resize(tokens);
    for (auto& v : t.values) v = x(gen);
    t.external_reward = x(gen);
    t.next_obs_value = x(gen);
  }
  return ep;
}

void BM_Advantages(benchmark::State& state) {
  const auto ep = make_episode(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const GaeConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(advantages(ep, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_Advantages)->Args({5, 6})->Args({50, 64})->Args({300, 256});

void BM_AdvantagesBruteForce(benchmark::State& state) {
  const auto ep = make_episode(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const GaeConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(advantages_bruteforce(ep, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_AdvantagesBruteForce)->Args({5, 6})->Args({20, 16});

void BM_UcbDecide(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::vector<std::uint64_t> pulls(k);
  std::vector<double> means(k);
  for (std::size_t a = 0; a < k; ++a) {
    pulls[a] = 1 + a;
    means[a] = 0.1 * static_cast<double>(a % 7);
  }
  const SummaryState s(pulls, means);
  for (auto _ : state) benchmark::DoNotOptimize(ucb_decide(s, 0.5));
}
BENCHMARK(BM_UcbDecide)->Arg(5)->Arg(10)->Arg(100);

void BM_RunEpisode(benchmark::State& state, const char* policy) {
  EpisodeConfig cfg;
  cfg.env = parse_family_spec("Gaussian5_Var1_MeanN0");
  cfg.horizon = 300;
  PolicyDecider d(parse_policy_spec(policy), &cfg.env);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_episode(d, cfg));
    ++cfg.seed;
  }
  state.SetItemsProcessed(state.iterations() * 300);
}
BENCHMARK_CAPTURE(BM_RunEpisode, ucb, "ucb:C=0.5");
BENCHMARK_CAPTURE(BM_RunEpisode, ts, "ts");

void BM_ScriptedAgentRoundTrip(benchmark::State& state) {
  const ScriptedAgent agent(parse_policy_spec("ucb:C=0.5"), nullptr);
  const SummaryState s({1, 2, 7, 3, 7}, {-0.249, 0.281, 0.790, 0.279, 1.015});
  for (auto _ : state) benchmark::DoNotOptimize(parse_response(agent.respond(s, 0, 21), 5));
}
BENCHMARK(BM_ScriptedAgentRoundTrip);

}  // namespace

BENCHMARK_MAIN();
