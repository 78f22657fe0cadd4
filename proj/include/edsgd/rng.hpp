#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace edsgd {

/// SplitMix64 finaliser; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream purposes. Keeping them distinct guarantees that, e.g., the schedule
/// sampled in round k does not depend on how many mini-batches were drawn.
enum class Stream : std::uint64_t {
  Schedule = 1,
  MiniBatch = 2,
  Dataset = 3,
  Shards = 4,
  Init = 5,
  Topology = 6,
  MonteCarlo = 7,
};

/// Seedable generator whose state is a pure function of a key path such as
/// (experiment seed, purpose, round, node). No wall-clock or OS entropy.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}
  Rng(std::uint64_t seed, Stream purpose, std::initializer_list<std::uint64_t> path = {})
      : engine_(derive(seed, purpose, path)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  double normal() { return normal_(engine_); }

private:
  static std::uint64_t derive(std::uint64_t seed, Stream purpose,
                              std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = mix64(seed ^ mix64(static_cast<std::uint64_t>(purpose)));
    for (std::uint64_t p : path)
      key = mix64(key ^ mix64(p + 0x632be59bd9b4e019ULL));
    return key;
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace edsgd
