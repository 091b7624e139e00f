#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "metabandit/advantage.hpp"
#include "metabandit/errors.hpp"

namespace metabandit {

using nlohmann::json;

namespace {

std::string id_of(const json& j) {
  const auto& id = j.at("episode");
  return id.is_string() ? id.get<std::string>() : id.dump();
}

}  // namespace

std::vector<std::pair<std::string, EpisodeRecord>> read_episode_records(std::istream& in) {
  std::vector<std::pair<std::string, EpisodeRecord>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string id = id_of(j);
      const auto turn = j.at("turn").get<std::size_t>();
      if (out.empty() || out.back().first != id) {
        if (turn != 0) throw ProtocolError("episode " + id + " does not start at turn 0");
        out.emplace_back(id, EpisodeRecord{});
      }
      auto& episode = out.back().second;
      if (turn != episode.turns.size()) throw ProtocolError("episode " + id + " skips to turn " + std::to_string(turn));
      TurnRecord rec;
      rec.values = j.at("values").get<std::vector<double>>();
      rec.external_reward = j.at("reward").get<double>();
      rec.next_obs_value = j.at("next_value").get<double>();
      episode.turns.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ProtocolError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ProtocolError& e) {
      throw ProtocolError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_episode_records(std::ostream& out, const std::vector<std::pair<std::string, EpisodeRecord>>& episodes) {
  for (const auto& [id, episode] : episodes) {
    for (std::size_t t = 0; t < episode.turns.size(); ++t) {
      const auto& turn = episode.turns[t];
      out << json{{"episode", id},
                  {"turn", t},
                  {"values", turn.values},
                  {"reward", turn.external_reward},
                  {"next_value", turn.next_obs_value}}
                 .dump()
          << '\n';
    }
  }
}

void write_advantage_records(std::ostream& out, const std::string& episode_id, const AdvantageField& field) {
  for (std::size_t t = 0; t < field.advantages.size(); ++t) {
    out << json{{"episode", episode_id},
                {"turn", t},
                {"advantages", field.advantages[t]},
                {"td_errors", field.td_errors[t]}}
               .dump()
        << '\n';
  }
}

}  // namespace metabandit
