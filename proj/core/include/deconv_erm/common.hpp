#ifndef DECONV_ERM_COMMON_HPP_
#define DECONV_ERM_COMMON_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace deconv_erm {

inline constexpr double kPi = std::numbers::pi;

// Axis-aligned box in R^d.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  double volume() const;
  bool contains(std::span<const double> x) const;

  static Box unit(std::size_t d);
};

// splitmix64 step; used to derive independent seeds from a master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based seed derivation: (master, stream, counter) -> seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t counter) {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + counter);
}

// Pairwise (tree) summation with a fixed association order.
double pairwise_sum(std::span<const double> values);

bool all_finite(std::span<const double> values);

}  // namespace deconv_erm

#endif  // DECONV_ERM_COMMON_HPP_
