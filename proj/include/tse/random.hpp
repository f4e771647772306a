#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tse {

/// Identifies one deterministic random stream. Equal specs always produce
/// bit-identical sequences, on any thread and in any order.
struct SeedSpec {
  std::uint64_t root_seed = 0;
  std::uint64_t stream_index = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(const SeedSpec& seed) noexcept {
  return splitmix64(splitmix64(seed.root_seed) ^ splitmix64(seed.stream_index + 0x632BE59BD9B4E019ULL));
}

}  // namespace detail

/// Child stream of `parent` labelled by `tag`. The child depends only on
/// (parent, tag), so nested Monte-Carlo loops can be scheduled freely.
constexpr SeedSpec derive(const SeedSpec& parent, std::uint64_t tag) noexcept {
  return SeedSpec{detail::mix_seed(parent), tag};
}

constexpr SeedSpec derive(const SeedSpec& parent, std::initializer_list<std::uint64_t> path) noexcept {
  SeedSpec s = parent;
  for (auto tag : path) {
    s = derive(s, tag);
  }
  return s;
}

/// Uniform variates in [0, 1) with 53 random bits, drawn from a
/// mt19937_64 engine seeded from a SeedSpec. The engine and the bit
/// extraction are both fully specified, so sequences are portable.
class RandomStream {
 public:
  explicit RandomStream(const SeedSpec& seed) : engine_(detail::mix_seed(seed)) {}

  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tse
