#include "app.hpp"

#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json_config.hpp"

namespace metabandit::cli {

int run_app(int argc, const char* const* argv) {
  CLI::App app{"Meta-bandit experimentation toolkit: evaluation, SFT data, analytics, agent serving"};
  app.name("metabandit");
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with default option values")->envname("METABANDIT_CONFIG");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run policies or external agents over fixed seeds");
  eval_cmd->add_option("--env", eval.envs, "Environment family, e.g. Gaussian5_Var1_MeanN0 (repeatable)");
  eval_cmd->add_option("--policy", eval.policies, "In-process policy, e.g. ucb:C=0.5 (repeatable)");
  eval_cmd->add_option("--agent", eval.agents, "External agent: cmd:<command> or http:<host:port[/path]> (repeatable)");
  eval_cmd->add_option("--label", eval.labels, "Decider label for the agent at the same position");
  eval_cmd->add_option("--episodes", eval.episodes, "Number of canonical seeds (0..n-1)")->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--horizon", eval.horizon, "Steps per episode")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed-file", eval.seed_file, "File with one seed per line (overrides --episodes)");
  eval_cmd->add_option("--rewards", eval.rewards, "Reward schemes to record")->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Output directory")->capture_default_str();
  eval_cmd->add_option("--jobs", eval.jobs, "Episodes run in parallel")->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--oracle", eval.oracle, "Policy annotating every step")->capture_default_str();
  eval_cmd->add_flag("--record-responses", eval.record_responses, "Keep raw agent responses in trajectories");
  eval_cmd->add_flag("--scripted", eval.scripted, "Route policies through their prompt/response round trip");
  eval_cmd->add_option("--og-invalid-reward", eval.og_invalid_reward, "og reward for an invalid response")
      ->capture_default_str();
  eval_cmd->add_option("--delta-top-mean", eval.delta_top_mean, "Best-arm mean for Delta families (default 0.5+delta/2)");
  eval_cmd->add_option("--retries", eval.retries, "Attempts per agent request")->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--timeout-ms", eval.timeout_ms, "Agent response timeout")->capture_default_str()
      ->check(CLI::PositiveNumber);

  SftCommandOptions sft;
  auto* sft_cmd = app.add_subcommand("gen-sft", "Generate templated UCB demonstrations");
  sft_cmd->add_option("--env", sft.env, "Environment family")->required();
  sft_cmd->add_option("--n", sft.n, "Number of examples")->capture_default_str()->check(CLI::PositiveNumber);
  sft_cmd->add_option("--horizon", sft.horizon, "Rollout horizon")->capture_default_str()->check(CLI::PositiveNumber);
  sft_cmd->add_option("-C,--C", sft.c, "UCB exploration constant")->capture_default_str();
  sft_cmd->add_option("--seed", sft.seed, "Corpus seed")->capture_default_str();
  sft_cmd->add_option("--jobs", sft.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  sft_cmd->add_option("--out", sft.out, "Output JSONL file")->capture_default_str();

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Recompute metrics and match rates from stored trajectories");
  analyze_cmd->add_option("inputs", analyze.inputs, "Trajectory files or directories")->required();
  analyze_cmd->add_option("--oracle", analyze.oracle, "Reference policy for match rates")->capture_default_str();
  analyze_cmd->add_option("--compare", analyze.compare, "Second policy to match against");
  analyze_cmd->add_option("--ucb-c", analyze.ucb_c, "Constant for grading claimed UCB values");
  analyze_cmd->add_option("--out", analyze.out, "Output directory")->capture_default_str();

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve-agent", "Serve a scripted policy over the agent wire protocol");
  serve_cmd->add_option("--policy", serve.policy, "Policy to serve")->capture_default_str();
  serve_cmd->add_option("--env", serve.env, "Environment family (needed for Thompson Sampling's matched prior)");
  serve_cmd->add_option("--http", serve.http, "Listen on host:port instead of stdin/stdout (port 0 picks one)");

  GaeOptions gae;
  auto* gae_cmd = app.add_subcommand("gae", "Token-level two-scale advantages for line-delimited episodes");
  gae_cmd->add_option("--in", gae.in, "Episode records ('-' for stdin)")->capture_default_str();
  gae_cmd->add_option("--out", gae.out, "Advantage records ('-' for stdout)")->capture_default_str();
  gae_cmd->add_option("--gamma-intra", gae.gamma_intra)->capture_default_str();
  gae_cmd->add_option("--lambda-intra", gae.lambda_intra)->capture_default_str();
  gae_cmd->add_option("--gamma-inter", gae.gamma_inter)->capture_default_str();
  gae_cmd->add_option("--lambda-inter", gae.lambda_inter)->capture_default_str();
  gae_cmd->add_flag("--check", gae.check, "Also evaluate the brute-force reference sum and report the deviation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (eval_cmd->parsed()) return run_eval(eval, std::cout, std::cerr);
  if (sft_cmd->parsed()) return run_gen_sft(sft, std::cout, std::cerr);
  if (analyze_cmd->parsed()) return run_analyze(analyze, std::cout, std::cerr);
  if (serve_cmd->parsed()) return run_serve_agent(serve, std::cout, std::cerr);
  if (gae_cmd->parsed()) return run_gae(gae, std::cout, std::cerr);
  return kUsage;
}

}  // namespace metabandit::cli
