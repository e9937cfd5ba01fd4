#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace squid {

using TokenSequence = std::vector<std::string>;

/// Answer/question normalization shared by EM, F1, BM25 and the encoder:
/// ASCII lowercase, drop every ASCII character that is neither alphanumeric
/// nor whitespace, drop the whole-token articles "a", "an", "the", then split
/// on whitespace. Bytes >= 0x80 pass through untouched.
TokenSequence normalize(std::string_view text);

/// 1 if the normalized prediction equals the normalized form of any gold.
int exact_match(std::string_view prediction, const std::vector<std::string>& golds);

/// Max over golds of bag-of-tokens F1. Two empty sequences score 1.
double token_f1(std::string_view prediction, const std::vector<std::string>& golds);

}  // namespace squid
