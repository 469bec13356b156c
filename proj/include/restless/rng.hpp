#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace restless {

// splitmix64 step, used to derive independent stream seeds from one root seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One stream of randomness. Wraps mt19937_64 and produces doubles directly
// from the raw 64-bit output so results do not depend on the standard
// library's distribution implementations.
class RandomStream {
 public:
  RandomStream() : engine_(0) {}
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  void seed(std::uint64_t s) { engine_.seed(s); }

  // Uniform on [0, 1).
  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open_closed() { return 1.0 - uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Index sampled from an (assumed normalized) pmf, walking the CDF in order.
  int categorical(const std::vector<double>& pmf) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      acc += pmf[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(pmf.size()) - 1;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Derives `count` well separated stream seeds from a root seed.
inline std::vector<std::uint64_t> derive_stream_seeds(std::uint64_t root, int count) {
  std::vector<std::uint64_t> seeds(count);
  std::uint64_t state = root;
  for (int i = 0; i < count; ++i) seeds[i] = splitmix64(state);
  return seeds;
}

}  // namespace restless
