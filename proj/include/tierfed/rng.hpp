#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tierfed {

// All randomness in a run flows from one root seed. Sub-seeds are derived
// as derive_seed(root, stream, a, b) where `stream` names the consumer
// ("train", "select", ...) and a/b are indices such as round and client id.
// Any component can therefore be replayed in isolation.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t a = 0, std::uint64_t b = 0);

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Fisher-Yates with an explicit generator, used instead of std::shuffle so
// the permutation depends only on the seed, not the standard library.
template <typename T>
void fisher_yates(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace tierfed
