#include <cctype>

#include "metabandit/agent_protocol.hpp"
#include "metabandit/text_format.hpp"

namespace metabandit {

namespace {

constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::size_t kMaxDigits = 9;

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

struct Index {
  std::size_t value;
  std::size_t end;
};

std::optional<Index> read_index(std::string_view s, std::size_t pos) {
  std::size_t end = pos;
  while (end < s.size() && is_digit(s[end])) ++end;
  if (end == pos || end - pos > kMaxDigits) return std::nullopt;
  std::size_t value = 0;
  for (std::size_t i = pos; i < end; ++i) value = value * 10 + static_cast<std::size_t>(s[i] - '0');
  return Index{value, end};
}

// Last "arm <n>" mention (case-insensitive, optional '#' or ':'), else a bare
// integer answer.
std::optional<std::size_t> extract_arm(std::string_view answer) {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i + 3 <= answer.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(answer[i])) != 'a' ||
        std::tolower(static_cast<unsigned char>(answer[i + 1])) != 'r' ||
        std::tolower(static_cast<unsigned char>(answer[i + 2])) != 'm') {
      continue;
    }
    if (i > 0 && std::isalpha(static_cast<unsigned char>(answer[i - 1]))) continue;
    std::size_t j = i + 3;
    while (j < answer.size() && (answer[j] == ' ' || answer[j] == '#' || answer[j] == ':')) ++j;
    if (const auto idx = read_index(answer, j)) {
      const std::size_t end = idx->end;
      // Reject things like "arm 4.5" or "arm 12abc".
      if (end >= answer.size() || !(std::isalnum(static_cast<unsigned char>(answer[end])) ||
                                    (answer[end] == '.' && end + 1 < answer.size() && is_digit(answer[end + 1])))) {
        found = idx->value;
      }
    }
  }
  if (found) return found;
  const auto bare = trim(answer);
  if (!bare.empty() && bare.size() <= kMaxDigits &&
      bare.find_first_not_of("0123456789") == std::string_view::npos) {
    return read_index(bare, 0)->value;
  }
  return std::nullopt;
}

}  // namespace

AgentResponse parse_response(std::string_view raw, std::size_t k) {
  AgentResponse out;
  out.raw_text = std::string(raw);

  const auto close = raw.rfind(kAnswerClose);
  if (close == std::string_view::npos) return out;
  const auto open = raw.substr(0, close).rfind(kAnswerOpen);
  if (open == std::string_view::npos) return out;
  const auto answer = raw.substr(open + kAnswerOpen.size(), close - open - kAnswerOpen.size());
  out.arm = extract_arm(answer);

  const auto before = raw.substr(0, open);
  std::string_view rationale;
  if (const auto t_open = before.find(kThinkOpen); t_open != std::string_view::npos) {
    const auto body_start = t_open + kThinkOpen.size();
    const auto t_close = before.find(kThinkClose, body_start);
    rationale = before.substr(body_start, t_close == std::string_view::npos ? std::string_view::npos : t_close - body_start);
  } else {
    rationale = before;
  }
  rationale = trim(rationale);
  if (!rationale.empty()) out.rationale = std::string(rationale);

  out.valid = out.arm && *out.arm < k && out.rationale.has_value();
  return out;
}

}  // namespace metabandit
