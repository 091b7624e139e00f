#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "metabandit/env.hpp"
#include "metabandit/policies.hpp"

namespace metabandit {

struct DemonstrationExample {
  std::string prompt;
  std::string response;
  std::string env;
  std::uint64_t episode_seed = 0;
  std::size_t step = 1;  // 1-based turn whose pre-decision state is shown
  std::size_t oracle_arm = 0;
};

struct SftOptions {
  std::size_t n_examples = 32768;
  std::size_t horizon = 50;
  double c = 0.5;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// Rolls UCB(C) on one fresh instance per example, picks a turn uniformly from
/// 1..horizon, and pairs that turn's prompt with the templated UCB
/// calculation. Example i depends only on (env, options.seed, i), so output is
/// identical for any `jobs`. Throws std::invalid_argument if n_examples or
/// horizon is 0.
std::vector<DemonstrationExample> generate_sft_dataset(const EnvFamilySpec& env, const SftOptions& options);

/// The summary state an example's prompt was rendered from.
SummaryState sft_example_state(const EnvFamilySpec& env, std::uint64_t episode_seed, std::size_t step, double c);

/// One JSON object per line: {"prompt", "response", "meta": {"env",
/// "episode_seed", "step", "oracle_arm"}}.
void write_sft_jsonl(std::ostream& out, const std::vector<DemonstrationExample>& examples);

/// Hex SHA-256 of the serialized corpus.
std::string sft_corpus_digest(const std::vector<DemonstrationExample>& examples);

/// Hex SHA-256 of arbitrary bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace metabandit
