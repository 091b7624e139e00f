#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace metabandit {

/// Discounting for turn/token-structured episodes. "intra" applies between
/// consecutive tokens of one response, "inter" across a turn boundary.
struct GaeConfig {
  double gamma_intra = 1.0;
  double lambda_intra = 1.0;
  double gamma_inter = 0.95;
  double lambda_inter = 0.95;
  double clip_eps = 0.2;

  /// Throws std::invalid_argument unless gamma/lambda lie in [0, 1] and
  /// clip_eps > 0.
  void validate() const;
};

/// One bandit turn of a token-level episode.
struct TurnRecord {
  /// Critic values at each generated token's state, first to last.
  std::vector<double> values;
  /// Shaped reward delivered at the last generated token.
  double external_reward = 0.0;
  /// Value of the next turn's observation (for the last turn, the one-turn
  /// lookahead past the horizon).
  double next_obs_value = 0.0;

  std::size_t token_count() const noexcept { return values.size(); }
};

struct EpisodeRecord {
  std::vector<TurnRecord> turns;

  /// Throws std::invalid_argument on an empty episode, an empty turn or a
  /// non-finite number.
  void validate() const;
};

/// Per-turn, per-token fields shaped like the episode.
using TokenField = std::vector<std::vector<double>>;

struct AdvantageField {
  TokenField advantages;
  TokenField td_errors;
};

/// Token-level TD errors: gamma_intra * V(next token) - V(token) inside a
/// response, r + gamma_inter * V(next obs) - V(token) at its last token.
TokenField td_errors(const EpisodeRecord& episode, const GaeConfig& cfg);

/// Reference implementation: builds the step-weighting product for every
/// pair of positions literally and sums all later TD errors with compensated
/// long-double accumulation. O(n^3) in total tokens; for verification only.
AdvantageField advantages_bruteforce(const EpisodeRecord& episode, const GaeConfig& cfg);

/// Production path: one backward sweep. Inside a response the trace decays
/// by lambda_intra * gamma_intra per token; from a response's last token it
/// reaches the next response's first token through lambda_inter * gamma_inter.
/// Nothing is carried past the final turn.
AdvantageField advantages(const EpisodeRecord& episode, const GaeConfig& cfg);

/// Clipped surrogate, averaged over every generated token:
///   mean(min(r * A, clip(r, 1 - eps, 1 + eps) * A))
/// Returned as an objective to maximize. Throws std::invalid_argument on a
/// shape mismatch or a non-positive ratio.
double ppo_loss(const TokenField& ratios, const AdvantageField& adv, const GaeConfig& cfg);

/// Line-delimited numeric episode schema. Input lines:
///   {"episode": <id>, "turn": <t>, "values": [...], "reward": r, "next_value": v}
/// Turns of one episode are consecutive and numbered from 0.
std::vector<std::pair<std::string, EpisodeRecord>> read_episode_records(std::istream& in);
void write_episode_records(std::ostream& out, const std::vector<std::pair<std::string, EpisodeRecord>>& episodes);
/// Output lines: {"episode", "turn", "advantages": [...], "td_errors": [...]}.
void write_advantage_records(std::ostream& out, const std::string& episode_id, const AdvantageField& field);

}  // namespace metabandit
