#include "metabandit/trajectory_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "metabandit/errors.hpp"

namespace metabandit {

using nlohmann::json;

namespace {

json transition_to_json(const Transition& tr) {
  json means = json::array();
  for (std::size_t a = 0; a < tr.state_before.k(); ++a) {
    const auto m = tr.state_before.mean(a);
    means.push_back(m ? json(*m) : json(nullptr));
  }
  json shaped = json::object();
  for (const auto& [scheme, value] : tr.shaped) shaped[std::string(to_string(scheme))] = value;

  json j;
  j["step"] = tr.step;
  j["pulls"] = std::vector<std::uint64_t>(tr.state_before.pull_counts().begin(), tr.state_before.pull_counts().end());
  j["means"] = std::move(means);
  j["action"] = tr.action ? json(*tr.action) : json(nullptr);
  j["valid"] = tr.valid;
  j["raw_reward"] = tr.raw_reward;
  j["shaped"] = std::move(shaped);
  j["oracle_arm"] = tr.oracle_arm;
  j["greedy"] = tr.greedy;
  j["optimal"] = tr.optimal;
  if (tr.response) j["response"] = *tr.response;
  return j;
}

Transition transition_from_json(const json& j, const std::vector<RewardScheme>& schemes) {
  Transition tr;
  tr.step = j.at("step").get<std::size_t>();
  const auto pulls = j.at("pulls").get<std::vector<std::uint64_t>>();
  const auto& jm = j.at("means");
  if (!jm.is_array() || jm.size() != pulls.size()) throw ProtocolError("means/pulls length mismatch");
  std::vector<double> means(pulls.size(), 0.0);
  for (std::size_t a = 0; a < pulls.size(); ++a) {
    if (!jm[a].is_null()) means[a] = jm[a].get<double>();
  }
  tr.state_before = SummaryState(pulls, means);
  if (!j.at("action").is_null()) tr.action = j.at("action").get<std::size_t>();
  tr.valid = j.at("valid").get<bool>();
  tr.raw_reward = j.at("raw_reward").get<double>();
  const auto& shaped = j.at("shaped");
  for (const auto scheme : schemes) {
    tr.shaped.emplace_back(scheme, shaped.at(std::string(to_string(scheme))).get<double>());
  }
  tr.oracle_arm = j.at("oracle_arm").get<std::size_t>();
  tr.greedy = j.at("greedy").get<bool>();
  tr.optimal = j.at("optimal").get<bool>();
  if (j.contains("response")) tr.response = j.at("response").get<std::string>();
  return tr;
}

}  // namespace

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  const auto& cfg = traj.config;
  json header;
  header["schema"] = kTrajectorySchema;
  header["decider"] = traj.decider;
  header["env"] = cfg.env.canonical_name;
  if (cfg.env.family == EnvFamily::BernoulliDelta && cfg.env.top_mean) {
    header["delta_top_mean"] = *cfg.env.top_mean;
  }
  header["horizon"] = cfg.horizon;
  header["seed"] = cfg.seed;
  header["oracle"] = to_string(cfg.oracle);
  json rewards = json::array();
  for (const auto s : cfg.reward_schemes) rewards.push_back(std::string(to_string(s)));
  header["rewards"] = std::move(rewards);
  header["og_invalid_reward"] = cfg.shaping.og_invalid_reward;
  header["instance"] = {{"true_means", traj.true_means}, {"optimal_arm", traj.optimal_arm}};
  header["length"] = traj.transitions.size();
  header["failure"] = traj.failure ? json(*traj.failure) : json(nullptr);
  out << header.dump() << '\n';
  for (const auto& tr : traj.transitions) out << transition_to_json(tr).dump() << '\n';
}

Trajectory read_trajectory(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ProtocolError("empty trajectory file");
  Trajectory traj;
  try {
    const json header = json::parse(line);
    const auto schema = header.value("schema", std::string{});
    if (schema != kTrajectorySchema) {
      throw ProtocolError("trajectory schema '" + schema + "' is not " + std::string(kTrajectorySchema));
    }
    auto& cfg = traj.config;
    cfg.env = parse_family_spec(header.at("env").get<std::string>());
    if (header.contains("delta_top_mean")) cfg.env.top_mean = header.at("delta_top_mean").get<double>();
    cfg.horizon = header.at("horizon").get<std::size_t>();
    cfg.seed = header.at("seed").get<std::uint64_t>();
    cfg.oracle = parse_policy_spec(header.at("oracle").get<std::string>());
    cfg.reward_schemes.clear();
    for (const auto& s : header.at("rewards")) cfg.reward_schemes.push_back(parse_reward_scheme(s.get<std::string>()));
    cfg.shaping.og_invalid_reward = header.at("og_invalid_reward").get<double>();
    traj.decider = header.at("decider").get<std::string>();
    traj.true_means = header.at("instance").at("true_means").get<std::vector<double>>();
    traj.optimal_arm = header.at("instance").at("optimal_arm").get<std::size_t>();
    if (traj.true_means.empty() || traj.optimal_arm >= traj.true_means.size()) {
      throw ProtocolError("bad instance digest");
    }
    if (!header.at("failure").is_null()) traj.failure = header.at("failure").get<std::string>();
    const auto length = header.at("length").get<std::size_t>();

    traj.transitions.reserve(length);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      traj.transitions.push_back(transition_from_json(json::parse(line), cfg.reward_schemes));
      cfg.record_responses = cfg.record_responses || traj.transitions.back().response.has_value();
    }
    if (traj.transitions.size() != length) {
      throw ProtocolError("trajectory declares " + std::to_string(length) + " transitions, found " +
                          std::to_string(traj.transitions.size()));
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed trajectory record: ") + e.what());
  }
  return traj;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trajectory(out, traj);
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return read_trajectory(in);
  } catch (const ProtocolError& e) {
    throw ProtocolError(path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> find_trajectory_files(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_regular_file(root)) {
    files.push_back(root);
    return files;
  }
  if (!fs::is_directory(root)) throw std::runtime_error("no such file or directory: " + root.string());
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl" &&
        entry.path().parent_path().filename() == "trajectories") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace metabandit
