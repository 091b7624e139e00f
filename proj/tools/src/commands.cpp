#include "commands.hpp"

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

#include "metabandit/advantage.hpp"
#include "metabandit/agent_protocol.hpp"
#include "metabandit/analytics.hpp"
#include "metabandit/errors.hpp"
#include "metabandit/report_io.hpp"
#include "metabandit/sft.hpp"
#include "metabandit/text_format.hpp"
#include "metabandit/trajectory_io.hpp"

namespace metabandit::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << bytes;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

template <class Write>
std::string render(Write&& write) {
  std::ostringstream ss;
  write(ss);
  return ss.str();
}

struct EvalTarget {
  std::string label;
  DeciderFactory factory;
};

// Writes per-group artifacts and returns the table row.
TableRow write_group(const fs::path& dir, const std::string& env, const std::string& label,
                     const std::vector<Trajectory>& trajs, const std::vector<std::string>& traj_bytes,
                     const MetricsRequest& request) {
  std::vector<EpisodeMetrics> metrics;
  metrics.reserve(trajs.size());
  for (const auto& t : trajs) metrics.push_back(episode_metrics(t, request));

  std::string all_bytes;
  for (const auto& b : traj_bytes) all_bytes += b;

  TableRow row{env, label, aggregate(metrics)};
  write_file(dir / "metrics.csv", render([&](std::ostream& o) { write_episode_metrics_csv(o, metrics); }));
  write_file(dir / "summary.json", render([&](std::ostream& o) { write_summary_json(o, row, sha256_hex(all_bytes)); }));
  return row;
}

}  // namespace

std::string sanitize_label(const std::string& label) {
  std::string out = label;
  for (char& ch : out) {
    const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '=' || ch == '-' || ch == '+';
    if (!keep) ch = '_';
  }
  return out.empty() ? "_" : out;
}

std::vector<std::uint64_t> read_seed_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open seed file " + path);
  std::vector<std::uint64_t> seeds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = trim(line);
    if (text.empty()) continue;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": not a seed: '" + std::string(text) + "'");
    }
    seeds.push_back(v);
  }
  if (seeds.empty()) throw std::runtime_error("seed file " + path + " lists no seeds");
  return seeds;
}

int run_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  std::vector<EnvFamilySpec> envs;
  std::vector<PolicySpec> policies;
  std::vector<AgentEndpoint> agents;
  EpisodeConfig base;
  std::vector<std::uint64_t> seeds;
  try {
    if (opts.envs.empty()) throw ConfigError("at least one --env is required");
    if (opts.policies.empty() && opts.agents.empty()) throw ConfigError("at least one --policy or --agent is required");
    if (opts.labels.size() > opts.agents.size()) throw ConfigError("more --label values than --agent values");
    for (const auto& e : opts.envs) {
      auto spec = parse_family_spec(e);
      if (opts.delta_top_mean && spec.family == EnvFamily::BernoulliDelta) spec.top_mean = opts.delta_top_mean;
      envs.push_back(std::move(spec));
    }
    for (const auto& p : opts.policies) policies.push_back(parse_policy_spec(p));
    for (const auto& a : opts.agents) agents.push_back(parse_agent_endpoint(a));
    base.horizon = opts.horizon;
    base.oracle = parse_policy_spec(opts.oracle);
    base.reward_schemes = parse_reward_schemes(opts.rewards);
    base.shaping.og_invalid_reward = opts.og_invalid_reward;
    base.record_responses = opts.record_responses;
    seeds = opts.seed_file.empty() ? canonical_seeds(opts.episodes) : read_seed_file(opts.seed_file);
    if (seeds.empty()) throw ConfigError("--episodes must be at least 1");
    if (base.horizon == 0) throw ConfigError("--horizon must be at least 1");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  const RetryPolicy retry{opts.retries, std::chrono::milliseconds(opts.timeout_ms)};
  const fs::path root(opts.out);
  std::vector<TableRow> rows;
  std::size_t failures = 0;
  try {
    for (const auto& env : envs) {
      EpisodeConfig cfg = base;
      cfg.env = env;
      std::vector<EvalTarget> targets;
      for (const auto& spec : policies) {
        const EnvFamilySpec* envp = &cfg.env;
        Policy(spec, envp);  // surface prior/family mismatches before any episode runs
        if (opts.scripted) {
          targets.push_back({to_string(spec), [spec, envp] { return std::make_unique<ScriptedAgentDecider>(spec, envp); }});
        } else {
          targets.push_back({to_string(spec), [spec, envp] { return std::make_unique<PolicyDecider>(spec, envp); }});
        }
      }
      for (std::size_t i = 0; i < agents.size(); ++i) {
        const std::string label = i < opts.labels.size() ? opts.labels[i] : opts.agents[i];
        const AgentEndpoint endpoint = agents[i];
        targets.push_back({label, [endpoint, retry, label] {
                             return std::make_unique<AgentDecider>(std::make_unique<AgentClient>(endpoint, retry), label);
                           }});
      }

      MetricsRequest request;
      request.oracle = cfg.oracle;
      for (const auto& target : targets) {
        const auto trajs = run_batch(target.factory, cfg, seeds, opts.jobs);
        const fs::path dir = root / env.canonical_name / sanitize_label(target.label);
        std::vector<std::string> bytes;
        bytes.reserve(trajs.size());
        for (const auto& t : trajs) {
          bytes.push_back(render([&](std::ostream& o) { write_trajectory(o, t); }));
          write_file(dir / "trajectories" / ("seed_" + std::to_string(t.config.seed) + ".jsonl"), bytes.back());
          if (t.failure) {
            ++failures;
            err << "episode " << t.config.seed << " (" << env.canonical_name << ", " << target.label
                << ") failed at " << *t.failure << '\n';
          }
        }
        rows.push_back(write_group(dir, env.canonical_name, target.label, trajs, bytes, request));
      }
    }
    const std::string table = render([&](std::ostream& o) { write_table_csv(o, rows); });
    write_file(root / "table.csv", table);
    out << table;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  if (failures > 0) {
    err << failures << " episode(s) failed; see the trajectory headers for details\n";
    return kRunFailure;
  }
  return kOk;
}

int run_gen_sft(const SftCommandOptions& opts, std::ostream& out, std::ostream& err) {
  EnvFamilySpec env;
  try {
    env = parse_family_spec(opts.env);
    if (opts.n == 0) throw ConfigError("--n must be at least 1");
    if (opts.horizon == 0) throw ConfigError("--horizon must be at least 1");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  try {
    SftOptions sft;
    sft.n_examples = opts.n;
    sft.horizon = opts.horizon;
    sft.c = opts.c;
    sft.seed = opts.seed;
    sft.jobs = opts.jobs;
    const auto examples = generate_sft_dataset(env, sft);
    const std::string bytes = render([&](std::ostream& o) { write_sft_jsonl(o, examples); });
    write_file(opts.out, bytes);
    out << "wrote " << examples.size() << " examples to " << opts.out << '\n';
    out << "sha256 " << sha256_hex(bytes) << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  return kOk;
}

int run_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err) {
  PolicySpec oracle;
  std::optional<PolicySpec> comparison;
  try {
    if (opts.inputs.empty()) throw ConfigError("no trajectory files or directories given");
    oracle = parse_policy_spec(opts.oracle);
    if (!opts.compare.empty()) comparison = parse_policy_spec(opts.compare);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  struct Group {
    std::vector<Trajectory> trajs;
    std::vector<std::string> bytes;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  try {
    for (const auto& input : opts.inputs) {
      const auto files = find_trajectory_files(input);
      if (files.empty()) throw std::runtime_error("no trajectory files under " + input);
      for (const auto& file : files) {
        std::string bytes = read_file(file);
        std::istringstream in(bytes);
        Trajectory t;
        try {
          t = read_trajectory(in);
        } catch (const std::exception& e) {
          throw ProtocolError(file.string() + ": " + e.what());
        }
        auto& g = groups[{t.config.env.canonical_name, t.decider}];
        g.trajs.push_back(std::move(t));
        g.bytes.push_back(std::move(bytes));
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  MetricsRequest request;
  request.oracle = oracle;
  if (opts.ucb_c) {
    request.ucb_c = opts.ucb_c;
  } else if (oracle.kind == PolicyKind::Ucb) {
    request.ucb_c = oracle.c;
  }

  try {
    const fs::path root(opts.out);
    std::vector<TableRow> rows;
    for (auto& [key, group] : groups) {
      // Seed order, so output does not depend on file naming.
      std::vector<std::size_t> order(group.trajs.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return group.trajs[a].config.seed < group.trajs[b].config.seed;
      });
      std::vector<Trajectory> trajs;
      std::vector<std::string> bytes;
      for (const auto i : order) {
        trajs.push_back(std::move(group.trajs[i]));
        bytes.push_back(std::move(group.bytes[i]));
      }
      const auto& [env, label] = key;
      const fs::path dir = root / env / sanitize_label(label);
      rows.push_back(write_group(dir, env, label, trajs, bytes, request));
      const auto curve = match_rate_by_step(trajs, oracle, comparison);
      write_file(dir / "match_rate.csv", render([&](std::ostream& o) { write_match_rate_csv(o, curve); }));
    }
    const std::string table = render([&](std::ostream& o) { write_table_csv(o, rows); });
    write_file(root / "table.csv", table);
    out << table;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  return kOk;
}

namespace {

// Blocks SIGINT/SIGTERM in the calling thread (and threads it starts later)
// and returns a set for sigwait.
sigset_t block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

std::pair<std::string, int> split_host_port(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("expected host:port, got '" + text + "'");
  const std::string port_text = text.substr(colon + 1);
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw ConfigError("bad port in '" + text + "'");
  }
  return {text.substr(0, colon), port};
}

}  // namespace

int run_serve_agent(const ServeOptions& opts, std::ostream& out, std::ostream& err) {
  std::optional<EnvFamilySpec> env;
  std::unique_ptr<ScriptedAgent> agent;
  std::pair<std::string, int> endpoint;
  try {
    if (!opts.env.empty()) env = parse_family_spec(opts.env);
    agent = std::make_unique<ScriptedAgent>(parse_policy_spec(opts.policy), env ? &*env : nullptr);
    if (!opts.http.empty()) endpoint = split_host_port(opts.http);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  const sigset_t signals = block_shutdown_signals();
  if (opts.http.empty()) {
    std::thread([signals, &out]() mutable {
      int sig = 0;
      sigwait(&signals, &sig);
      out.flush();
      std::_Exit(kOk);
    }).detach();
    serve_stream(*agent, std::cin, out);
    return kOk;
  }

  HttpAgentServer server(*agent);
  int port = 0;
  try {
    port = server.bind(endpoint.first, endpoint.second);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  out << "listening on " << endpoint.first << ':' << port << std::endl;
  std::thread stopper([signals, &server]() mutable {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.serve();
  stopper.join();
  return kOk;
}

int run_gae(const GaeOptions& opts, std::ostream& out, std::ostream& err) {
  GaeConfig cfg;
  cfg.gamma_intra = opts.gamma_intra;
  cfg.lambda_intra = opts.lambda_intra;
  cfg.gamma_inter = opts.gamma_inter;
  cfg.lambda_inter = opts.lambda_inter;
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  std::vector<std::pair<std::string, EpisodeRecord>> episodes;
  try {
    if (opts.in == "-") {
      episodes = read_episode_records(std::cin);
    } else {
      std::ifstream f(opts.in);
      if (!f) throw std::runtime_error("cannot open " + opts.in);
      episodes = read_episode_records(f);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  double worst = 0.0;
  std::ostringstream records;
  try {
    for (const auto& [id, episode] : episodes) {
      const auto field = advantages(episode, cfg);
      write_advantage_records(records, id, field);
      if (!opts.check) continue;
      const auto ref = advantages_bruteforce(episode, cfg);
      for (std::size_t t = 0; t < field.advantages.size(); ++t) {
        for (std::size_t j = 0; j < field.advantages[t].size(); ++j) {
          const double b = ref.advantages[t][j];
          worst = std::max(worst, std::fabs(field.advantages[t][j] - b) / std::max(1.0, std::fabs(b)));
        }
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  if (opts.out == "-") {
    out << records.str();
  } else {
    write_file(opts.out, records.str());
  }
  if (opts.check) {
    err << "max relative deviation from the reference sum: " << worst << '\n';
    if (!(worst <= 1e-10)) return kRunFailure;
  }
  return kOk;
}

}  // namespace metabandit::cli
