#ifndef MECHNLI_RANDOM_H_
#define MECHNLI_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace mechnli {

// 64-bit FNV-1a. Used for split assignment and config hashes.
std::uint64_t Fnv1a64(std::string_view data);

// Derives an independent seed for a named sub-task (group id, kind name...).
std::uint64_t MixSeed(std::uint64_t seed, std::string_view salt);

// Seeded generator with platform-independent draws. std::mt19937_64 output is
// fully specified by the standard; the distributions below avoid the
// implementation-defined std::uniform_int_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Next() { return engine_(); }

  // Uniform in [0, n); n must be positive.
  std::size_t UniformIndex(std::size_t n);

  template <typename T>
  const T &Choose(const std::vector<T> &items) {
    return items[UniformIndex(items.size())];
  }

  template <typename T>
  void Shuffle(std::vector<T> &items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[UniformIndex(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mechnli

#endif  // MECHNLI_RANDOM_H_
