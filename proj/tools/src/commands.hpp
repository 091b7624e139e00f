#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace metabandit::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,         // bad flags, unparsable env/policy specs, unreadable config
  kRunFailure = 3,    // an episode or agent failed; artifacts are still written
  kInputError = 4,    // unreadable or schema-mismatched input files
};

struct EvalOptions {
  std::vector<std::string> envs;
  std::vector<std::string> policies;
  std::vector<std::string> agents;
  /// Decider labels for `agents`, by position. Missing entries default to
  /// the endpoint string.
  std::vector<std::string> labels;
  std::size_t episodes = 64;
  std::size_t horizon = 300;
  std::string seed_file;
  std::string rewards = "og,stg,alg";
  std::string out = "runs";
  std::size_t jobs = 1;
  std::string oracle = "ucb:C=0.5";
  bool record_responses = false;
  /// Run in-process policies through their scripted-agent prompt/parse path.
  bool scripted = false;
  double og_invalid_reward = -0.5;
  std::optional<double> delta_top_mean;
  int retries = 3;
  int timeout_ms = 30000;
};

struct SftCommandOptions {
  std::string env;
  std::size_t n = 32768;
  std::size_t horizon = 50;
  double c = 0.5;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out = "sft.jsonl";
};

struct AnalyzeOptions {
  std::vector<std::string> inputs;
  std::string oracle = "ucb:C=0.5";
  std::string compare;
  std::optional<double> ucb_c;
  std::string out = "analysis";
};

struct ServeOptions {
  std::string policy = "ucb:C=0.5";
  std::string env;
  /// host:port; empty means newline-delimited records on stdin/stdout.
  std::string http;
};

struct GaeOptions {
  std::string in = "-";
  std::string out = "-";
  double gamma_intra = 1.0;
  double lambda_intra = 1.0;
  double gamma_inter = 0.95;
  double lambda_inter = 0.95;
  bool check = false;
};

int run_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int run_gen_sft(const SftCommandOptions& opts, std::ostream& out, std::ostream& err);
int run_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err);
int run_serve_agent(const ServeOptions& opts, std::ostream& out, std::ostream& err);
int run_gae(const GaeOptions& opts, std::ostream& out, std::ostream& err);

/// Directory-safe form of a decider label ("ucb:C=0.5" -> "ucb_C=0.5").
std::string sanitize_label(const std::string& label);

/// Seeds, one unsigned integer per line; blank lines and '#' comments are
/// skipped. Throws std::runtime_error on anything else.
std::vector<std::uint64_t> read_seed_file(const std::string& path);

}  // namespace metabandit::cli
