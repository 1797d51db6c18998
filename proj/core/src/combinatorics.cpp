#include "demecoal/combinatorics.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>

namespace demecoal::combinatorics {

std::optional<Wide> checked_mul(Wide a, Wide b) {
  Wide out = 0;
  if (__builtin_mul_overflow(a, b, &out)) return std::nullopt;
  return out;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  Wide r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<Wide>(n - k + i) / static_cast<Wide>(i);
  }
  if (r > UINT64_MAX) throw std::overflow_error("binomial coefficient overflows 64 bits");
  return static_cast<std::uint64_t>(r);
}

std::uint64_t falling_factorial(int n, int k) {
  if (k < 0) throw std::invalid_argument("negative falling factorial order");
  if (k > n) return 0;
  Wide r = 1;
  for (int i = 0; i < k; ++i) {
    auto next = checked_mul(r, static_cast<Wide>(n - i));
    if (!next || *next > UINT64_MAX) throw std::overflow_error("falling factorial overflow");
    r = *next;
  }
  return static_cast<std::uint64_t>(r);
}

std::uint64_t factorial(int n) { return falling_factorial(n, n); }

std::vector<std::vector<int>> integer_partitions(int total, int min_part, int max_parts) {
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  std::function<void(int, int)> rec = [&](int remaining, int largest) {
    if (remaining == 0) {
      out.push_back(current);
      return;
    }
    if (max_parts > 0 && static_cast<int>(current.size()) == max_parts) return;
    for (int part = std::min(remaining, largest); part >= min_part; --part) {
      current.push_back(part);
      rec(remaining - part, part);
      current.pop_back();
    }
  };
  if (total == 0) return {{}};
  rec(total, total);
  return out;
}

std::uint64_t unordered_split_count(const std::vector<int>& sizes) {
  int total = 0;
  std::map<int, int> same;
  for (int s : sizes) {
    total += s;
    ++same[s];
  }
  // Multinomial built from binomials keeps intermediates small.
  Wide r = 1;
  int placed = 0;
  for (int s : sizes) {
    placed += s;
    auto next = checked_mul(r, binomial(placed, s));
    if (!next) throw std::overflow_error("multinomial overflow");
    r = *next;
  }
  for (const auto& [size, count] : same) r /= factorial(count);
  if (r > UINT64_MAX) throw std::overflow_error("split count overflows 64 bits");
  return static_cast<std::uint64_t>(r);
}

void ExactRatio::multiply(std::uint64_t factor) {
  approx_ *= static_cast<long double>(factor);
  if (overflowed_) return;
  auto next = checked_mul(num_, factor);
  if (!next) {
    overflowed_ = true;
    return;
  }
  num_ = *next;
}

void ExactRatio::divide(std::uint64_t factor) {
  if (factor == 0) throw std::domain_error("division by zero in ExactRatio");
  approx_ /= static_cast<long double>(factor);
  if (overflowed_) return;
  auto next = checked_mul(den_, factor);
  if (!next) {
    overflowed_ = true;
    return;
  }
  den_ = *next;
}

double ExactRatio::value() const {
  if (overflowed_) return static_cast<double>(approx_);
  if (num_ == 0) return 0.0;
  // Reduce before converting so both parts fit a long double mantissa when possible.
  Wide a = num_;
  Wide b = den_;
  while (b != 0) {
    const Wide t = a % b;
    a = b;
    b = t;
  }
  const Wide num = num_ / a;
  const Wide den = den_ / a;
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

}  // namespace demecoal::combinatorics
