#include "squid/textnorm.hpp"

#include <algorithm>
#include <map>

namespace squid {
namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_article(std::string_view token) {
  return token == "a" || token == "an" || token == "the";
}

double f1_single(const TokenSequence& pred, const TokenSequence& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;

  std::map<std::string_view, int> gold_counts;
  for (const auto& t : gold) ++gold_counts[t];
  int common = 0;
  for (const auto& t : pred) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

TokenSequence normalize(std::string_view text) {
  TokenSequence tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !is_article(current)) tokens.push_back(current);
    current.clear();
  };
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_ascii_space(c)) {
      flush();
    } else if (c >= 0x80) {
      current.push_back(ch);
    } else if (is_ascii_alnum(c)) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    }
    // Remaining ASCII is punctuation/control: removed without splitting.
  }
  flush();
  return tokens;
}

int exact_match(std::string_view prediction, const std::vector<std::string>& golds) {
  const auto pred = normalize(prediction);
  return std::any_of(golds.begin(), golds.end(),
                     [&](const std::string& g) { return normalize(g) == pred; })
             ? 1
             : 0;
}

double token_f1(std::string_view prediction, const std::vector<std::string>& golds) {
  const auto pred = normalize(prediction);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_single(pred, normalize(g)));
  return best;
}

}  // namespace squid
