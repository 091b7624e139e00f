#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "metabandit/rollout.hpp"

namespace metabandit {

/// Schema tag carried by every trajectory file header.
inline constexpr std::string_view kTrajectorySchema = "metabandit.trajectory.v1";

/// Line-delimited JSON. Line 1 is the header:
///   {"schema", "decider", "env", "delta_top_mean"?, "horizon", "seed",
///    "oracle", "rewards", "og_invalid_reward",
///    "instance": {"true_means", "optimal_arm"}, "length", "failure"}
/// then one line per transition:
///   {"step", "pulls", "means" (null for unpulled arms), "action" (or null),
///    "valid", "raw_reward", "shaped": {scheme: value}, "oracle_arm",
///    "greedy", "optimal", "response"?}
/// Doubles are written in shortest round-trip form, so output is
/// byte-stable for a given trajectory.
void write_trajectory(std::ostream& out, const Trajectory& traj);
/// Throws ProtocolError on a schema mismatch or malformed record.
Trajectory read_trajectory(std::istream& in);

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path);

/// Every *.jsonl trajectory file under `root` (recursively, sorted by path),
/// or `root` itself if it is a file.
std::vector<std::filesystem::path> find_trajectory_files(const std::filesystem::path& root);

}  // namespace metabandit
