#include "metabandit/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metabandit {

namespace {

bool unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

// Neumaier summation in long double.
class CompensatedSum {
 public:
  void add(long double x) {
    const long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  long double value() const { return sum_ + comp_; }

 private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

// Start index of turn `tau`'s span as seen from position (t, j).
std::size_t span_start(std::size_t tau, std::size_t t, std::size_t j) { return tau == t ? j : 0; }

// Step-weighting product from (t, j) to (tau, k), one factor at a time.
long double step_weight(const EpisodeRecord& ep, const GaeConfig& cfg, std::size_t t, std::size_t j, std::size_t tau,
                        std::size_t k) {
  const long double intra = static_cast<long double>(cfg.lambda_intra) * cfg.gamma_intra;
  const long double inter = static_cast<long double>(cfg.lambda_inter) * cfg.gamma_inter;
  long double p = 1.0L;
  for (std::size_t turn = t; turn < tau; ++turn) {
    p *= inter;
    const std::size_t last = ep.turns[turn].token_count() - 1;
    for (std::size_t u = span_start(turn, t, j); u < last; ++u) p *= intra;
  }
  for (std::size_t u = span_start(tau, t, j); u < k; ++u) p *= intra;
  return p;
}

TokenField shaped_like(const EpisodeRecord& ep) {
  TokenField f;
  f.reserve(ep.turns.size());
  for (const auto& turn : ep.turns) f.emplace_back(turn.token_count(), 0.0);
  return f;
}

}  // namespace

void GaeConfig::validate() const {
  if (!unit_interval(gamma_intra) || !unit_interval(lambda_intra) || !unit_interval(gamma_inter) ||
      !unit_interval(lambda_inter)) {
    throw std::invalid_argument("discount and trace parameters must lie in [0, 1]");
  }
  if (!(clip_eps > 0.0)) throw std::invalid_argument("clip_eps must be positive");
}

void EpisodeRecord::validate() const {
  if (turns.empty()) throw std::invalid_argument("episode has no turns");
  for (std::size_t t = 0; t < turns.size(); ++t) {
    const auto& turn = turns[t];
    if (turn.values.empty()) throw std::invalid_argument("turn " + std::to_string(t) + " has no tokens");
    const bool finite = std::all_of(turn.values.begin(), turn.values.end(), [](double v) { return std::isfinite(v); }) &&
                        std::isfinite(turn.external_reward) && std::isfinite(turn.next_obs_value);
    if (!finite) throw std::invalid_argument("turn " + std::to_string(t) + " has a non-finite number");
  }
}

TokenField td_errors(const EpisodeRecord& ep, const GaeConfig& cfg) {
  ep.validate();
  cfg.validate();
  TokenField delta = shaped_like(ep);
  for (std::size_t t = 0; t < ep.turns.size(); ++t) {
    const auto& v = ep.turns[t].values;
    const std::size_t last = v.size() - 1;
    for (std::size_t j = 0; j < last; ++j) delta[t][j] = cfg.gamma_intra * v[j + 1] - v[j];
    delta[t][last] = ep.turns[t].external_reward + cfg.gamma_inter * ep.turns[t].next_obs_value - v[last];
  }
  return delta;
}

AdvantageField advantages_bruteforce(const EpisodeRecord& ep, const GaeConfig& cfg) {
  AdvantageField out;
  out.td_errors = td_errors(ep, cfg);
  out.advantages = shaped_like(ep);
  const std::size_t turns = ep.turns.size();
  for (std::size_t t = 0; t < turns; ++t) {
    for (std::size_t j = 0; j < ep.turns[t].token_count(); ++j) {
      CompensatedSum sum;
      for (std::size_t tau = t; tau < turns; ++tau) {
        for (std::size_t k = span_start(tau, t, j); k < ep.turns[tau].token_count(); ++k) {
          sum.add(step_weight(ep, cfg, t, j, tau, k) * static_cast<long double>(out.td_errors[tau][k]));
        }
      }
      out.advantages[t][j] = static_cast<double>(sum.value());
    }
  }
  return out;
}

AdvantageField advantages(const EpisodeRecord& ep, const GaeConfig& cfg) {
  AdvantageField out;
  out.td_errors = td_errors(ep, cfg);
  out.advantages = shaped_like(ep);
  const double intra = cfg.lambda_intra * cfg.gamma_intra;
  const double inter = cfg.lambda_inter * cfg.gamma_inter;
  double carry = 0.0;  // advantage at the first token of the following turn
  for (std::size_t t = ep.turns.size(); t-- > 0;) {
    auto& adv = out.advantages[t];
    const auto& delta = out.td_errors[t];
    const std::size_t last = adv.size() - 1;
    adv[last] = delta[last] + inter * carry;
    for (std::size_t j = last; j-- > 0;) adv[j] = delta[j] + intra * adv[j + 1];
    carry = adv[0];
  }
  return out;
}

double ppo_loss(const TokenField& ratios, const AdvantageField& adv, const GaeConfig& cfg) {
  cfg.validate();
  if (ratios.size() != adv.advantages.size()) throw std::invalid_argument("ratio field has the wrong number of turns");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < ratios.size(); ++t) {
    if (ratios[t].size() != adv.advantages[t].size()) {
      throw std::invalid_argument("ratio field has the wrong token count in turn " + std::to_string(t));
    }
    for (std::size_t j = 0; j < ratios[t].size(); ++j) {
      const double r = ratios[t][j];
      if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("probability ratios must be positive");
      const double a = adv.advantages[t][j];
      const double clipped = std::clamp(r, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      total += std::min(r * a, clipped * a);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("no generated tokens");
  return total / static_cast<double>(count);
}

}  // namespace metabandit
