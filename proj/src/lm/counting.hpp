#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "taptype/lm.hpp"

namespace taptype::lm::detail {

using CountTable = std::unordered_map<TokenSeq, std::uint64_t>;

// counts[k-1] holds every k-gram of `<s> t_1 .. t_m </s>` that ends on a
// predicted token (t_1 .. </s>), weighted by the sequence multiplicity.
inline std::vector<CountTable> count_ngrams(const std::vector<std::pair<TokenSeq, std::uint64_t>>& sequences,
                                            std::size_t order) {
  std::vector<CountTable> counts(order);
  TokenSeq padded;
  for (const auto& [seq, weight] : sequences) {
    padded.assign(1, Vocabulary::kBos);
    padded += seq;
    padded.push_back(Vocabulary::kEos);
    for (std::size_t end = 1; end < padded.size(); ++end)
      for (std::size_t k = 1; k <= order && k <= end + 1; ++k)
        counts[k - 1][padded.substr(end + 1 - k, k)] += weight;
  }
  return counts;
}

// Entries sorted by key so that floating-point accumulation is reproducible.
template <typename Map>
std::vector<typename Map::const_pointer> sorted_entries(const Map& map) {
  std::vector<typename Map::const_pointer> out;
  out.reserve(map.size());
  for (const auto& kv : map) out.push_back(&kv);
  std::sort(out.begin(), out.end(), [](auto a, auto b) { return a->first < b->first; });
  return out;
}

}  // namespace taptype::lm::detail
