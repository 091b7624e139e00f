#include "metabandit/sft.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "metabandit/agent_protocol.hpp"
#include "metabandit/rollout.hpp"

namespace metabandit {

namespace {

constexpr auto tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

std::string example_line(const DemonstrationExample& ex) {
  nlohmann::json j;
  j["prompt"] = ex.prompt;
  j["response"] = ex.response;
  j["meta"] = {{"env", ex.env}, {"episode_seed", ex.episode_seed}, {"step", ex.step}, {"oracle_arm", ex.oracle_arm}};
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

SummaryState sft_example_state(const EnvFamilySpec& env, std::uint64_t episode_seed, std::size_t step, double c) {
  const BanditInstance instance = episode_instance(env, episode_seed);
  EpisodeRewards rewards(instance, episode_seed);
  SummaryState state(instance.k());
  for (std::size_t t = 1; t < step; ++t) {
    const auto arm = ucb_decide(state, c).arm;
    state.record(arm, rewards.pull(arm));
  }
  return state;
}

std::vector<DemonstrationExample> generate_sft_dataset(const EnvFamilySpec& env, const SftOptions& options) {
  if (options.n_examples == 0) throw std::invalid_argument("n_examples must be at least 1");
  if (options.horizon == 0) throw std::invalid_argument("horizon must be at least 1");

  PolicySpec ucb;
  ucb.kind = PolicyKind::Ucb;
  ucb.c = options.c;
  const ScriptedAgent teacher(ucb, &env);

  std::vector<DemonstrationExample> out(options.n_examples);
  auto build = [&](std::size_t i) {
    const std::uint64_t episode_seed = derive_seed(options.seed, {tag(StreamTag::SftEpisode), i});
    auto step_rng = RngStream::child(episode_seed, {tag(StreamTag::SftStep)});
    const std::size_t step = 1 + static_cast<std::size_t>(step_rng.uniform_index(options.horizon));
    const SummaryState state = sft_example_state(env, episode_seed, step, options.c);

    DemonstrationExample& ex = out[i];
    ex.prompt = render_prompt(state, state.k()).text;
    ex.response = teacher.respond(state, episode_seed, step);
    ex.env = env.canonical_name;
    ex.episode_seed = episode_seed;
    ex.step = step;
    ex.oracle_arm = teacher.decide(state, episode_seed, step).arm;
  };

  const std::size_t workers = std::clamp<std::size_t>(options.jobs, 1, options.n_examples);
  if (workers == 1) {
    for (std::size_t i = 0; i < options.n_examples; ++i) build(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < options.n_examples; i = next++) build(i);
      });
    }
  }
  return out;
}

void write_sft_jsonl(std::ostream& out, const std::vector<DemonstrationExample>& examples) {
  for (const auto& ex : examples) out << example_line(ex) << '\n';
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xF];
  }
  return hex;
}

std::string sft_corpus_digest(const std::vector<DemonstrationExample>& examples) {
  std::ostringstream buf;
  write_sft_jsonl(buf, examples);
  return sha256_hex(buf.str());
}

}  // namespace metabandit
