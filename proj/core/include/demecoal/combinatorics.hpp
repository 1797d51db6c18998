#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace demecoal::combinatorics {

using Wide = unsigned __int128;

/// Multiplies with overflow detection; std::nullopt on overflow.
std::optional<Wide> checked_mul(Wide a, Wide b);

std::uint64_t binomial(int n, int k);
/// n (n-1) ... (n-k+1); zero when k > n.
std::uint64_t falling_factorial(int n, int k);
std::uint64_t factorial(int n);

/// Integer partitions of `total` into parts of at least `min_part`, each
/// listed in descending order. At most `max_parts` parts when positive.
std::vector<std::vector<int>> integer_partitions(int total, int min_part = 1,
                                                 int max_parts = 0);

/// n! / (prod sizes_i! * prod_j b_j!) where b_j counts the sizes equal to j:
/// the number of ways to split sum(sizes) labeled items into unordered groups
/// with the given sizes.
std::uint64_t unordered_split_count(const std::vector<int>& sizes);

/// Exact product of integer factors over a product of integer factors,
/// converted to double once at the end. Falls back to long double
/// arithmetic when the 128-bit numerator or denominator would overflow.
class ExactRatio {
 public:
  void multiply(std::uint64_t factor);
  void divide(std::uint64_t factor);
  double value() const;

 private:
  Wide num_ = 1;
  Wide den_ = 1;
  bool overflowed_ = false;
  long double approx_ = 1.0L;
};

}  // namespace demecoal::combinatorics
