#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "demecoal/measures.hpp"

namespace demecoal {

/// Unordered allele configuration {n_1, ..., n_k}; stored sorted descending.
struct AlleleConfig {
  std::vector<int> counts;

  static AlleleConfig from_counts(std::vector<int> counts);
  int n() const;
  int k() const { return static_cast<int>(counts.size()); }
  /// Number of set partitions of [n] with these block sizes.
  std::uint64_t multiplicity() const;

  auto operator<=>(const AlleleConfig&) const = default;
  bool operator==(const AlleleConfig&) const = default;
};

/// "3+1+1"
std::string to_string(const AlleleConfig& c);
AlleleConfig parse_allele_config(const std::string& text);

/// All configurations of n, in descending lexicographic order.
std::vector<AlleleConfig> allele_configs(int n);

inline constexpr int kMaxRecursionSize = 30;

/// Infinitely-many-alleles sampling recursion for a Lambda-coalescent with
/// within-deme measure Lambda^d and "mutation" (emigration) rate m1 per
/// lineage. One instance holds its own memo.
class SamplingRecursion {
 public:
  SamplingRecursion(UnitIntervalMeasure reproduction_law, double migration_rate, double scale = 1.0);

  /// The recursion evaluated literally. Its solution is the law of the
  /// exchangeably ordered count vector (n_1, ..., n_k).
  double ordered_probability(const AlleleConfig& c);
  /// Probability that the fast phase ends in one given labeled partition
  /// with these block sizes.
  double labeled_probability(const AlleleConfig& c);
  /// Probability of the block-size profile itself (summed over labelings).
  double configuration_probability(const AlleleConfig& c);

 private:
  double solve(const std::vector<int>& counts);

  UnitIntervalMeasure law_;
  double m1_;
  double scale_;
  std::map<std::vector<int>, double> memo_;
  std::map<int, std::vector<double>> g_by_n_;  // g_{n,k}, plus the total at index 0
};

/// Probability that the fast phase started from a single deme holding n
/// singletons ends in one fixed partition with block sizes `config`.
double p_allele_config(const AlleleConfig& config, const UnitIntervalMeasure& reproduction_law,
                       double migration_rate, double scale = 1.0);

/// |sum over configurations of multiplicity * p - 1|; n <= 10.
double p_total_check(int n, const UnitIntervalMeasure& reproduction_law, double migration_rate,
                     double scale = 1.0);

}  // namespace demecoal
