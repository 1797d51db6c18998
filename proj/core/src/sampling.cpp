#include "demecoal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "demecoal/combinatorics.hpp"
#include "demecoal/rates.hpp"

namespace demecoal {

namespace cb = combinatorics;

AlleleConfig AlleleConfig::from_counts(std::vector<int> counts) {
  if (counts.empty()) throw std::invalid_argument("an allele configuration needs k >= 1");
  for (int c : counts) {
    if (c < 1) throw std::invalid_argument("allele counts must be >= 1");
  }
  std::sort(counts.rbegin(), counts.rend());
  return AlleleConfig{std::move(counts)};
}

int AlleleConfig::n() const {
  int total = 0;
  for (int c : counts) total += c;
  return total;
}

std::uint64_t AlleleConfig::multiplicity() const {
  cb::Wide m = cb::unordered_split_count(counts);
  return static_cast<std::uint64_t>(m);
}

std::string to_string(const AlleleConfig& c) {
  std::string out;
  for (std::size_t i = 0; i < c.counts.size(); ++i) {
    if (i) out += '+';
    out += std::to_string(c.counts[i]);
  }
  return out;
}

AlleleConfig parse_allele_config(const std::string& text) {
  std::vector<int> counts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, '+')) {
    std::size_t used = 0;
    const int v = std::stoi(part, &used);
    if (used != part.size()) throw std::invalid_argument("bad allele configuration '" + text + "'");
    counts.push_back(v);
  }
  return AlleleConfig::from_counts(std::move(counts));
}

std::vector<AlleleConfig> allele_configs(int n) {
  if (n < 1) throw std::invalid_argument("allele configurations need n >= 1");
  std::vector<AlleleConfig> out;
  for (auto& parts : cb::integer_partitions(n)) out.push_back(AlleleConfig{std::move(parts)});
  std::sort(out.rbegin(), out.rend());
  return out;
}

SamplingRecursion::SamplingRecursion(UnitIntervalMeasure reproduction_law, double migration_rate,
                                     double scale)
    : law_(std::move(reproduction_law)), m1_(migration_rate), scale_(scale) {
  if (!(m1_ >= 0.0)) throw std::invalid_argument("m1 must be >= 0");
  if (!(scale_ >= 0.0)) throw std::invalid_argument("scale must be >= 0");
}

double SamplingRecursion::solve(const std::vector<int>& counts) {
  int n = 0;
  for (int c : counts) n += c;
  if (n == 1) return 1.0;
  if (const auto it = memo_.find(counts); it != memo_.end()) return it->second;

  auto& g = g_by_n_[n];
  if (g.empty()) {
    const auto rates = g_rates(law_, n, scale_);
    g = rates.by_target;
    g[0] = rates.total_from_sum;
  }
  const double denom = g[0] + n * m1_;
  if (!(denom > 0.0)) throw std::invalid_argument("recursion undefined: g_n + n m1 = 0");
  const auto k = static_cast<int>(counts.size());
  double p = 0.0;
  auto reduced = [](std::vector<int> c) {
    std::sort(c.rbegin(), c.rend());
    return c;
  };
  for (int j = 0; j < k; ++j) {
    if (counts[static_cast<std::size_t>(j)] != 1) continue;
    auto rest = counts;
    rest.erase(rest.begin() + j);
    p += n * m1_ / denom / k * solve(rest);
  }
  for (int i = 1; i <= n - 1; ++i) {
    const double w = g[static_cast<std::size_t>(n - i)] / denom;
    if (w == 0.0) continue;
    for (int j = 0; j < k; ++j) {
      const int nj = counts[static_cast<std::size_t>(j)];
      if (nj <= i) continue;
      auto smaller = counts;
      smaller[static_cast<std::size_t>(j)] -= i;
      p += w * (nj - i) / static_cast<double>(n - i) * solve(reduced(std::move(smaller)));
    }
  }
  memo_.emplace(counts, p);
  return p;
}

double SamplingRecursion::ordered_probability(const AlleleConfig& c) {
  if (c.counts.empty()) throw std::invalid_argument("empty allele configuration");
  if (c.n() > kMaxRecursionSize) throw std::invalid_argument("sampling recursion limited to n <= 30");
  return solve(c.counts);
}

double SamplingRecursion::labeled_probability(const AlleleConfig& c) {
  // V(n) = P(labeled) * n! / (k! prod n_j!), computed as a product of ratios.
  double factor = 1.0;
  const int n = c.n();
  int used = 0;
  for (int nj : c.counts) {
    // divide by C(n - used, nj)
    factor /= static_cast<double>(cb::binomial(n - used, nj));
    used += nj;
  }
  for (int i = 2; i <= c.k(); ++i) factor *= i;
  return ordered_probability(c) * factor;
}

double SamplingRecursion::configuration_probability(const AlleleConfig& c) {
  return labeled_probability(c) * static_cast<double>(c.multiplicity());
}

double p_allele_config(const AlleleConfig& config, const UnitIntervalMeasure& reproduction_law,
                       double migration_rate, double scale) {
  SamplingRecursion rec(reproduction_law, migration_rate, scale);
  return rec.labeled_probability(config);
}

double p_total_check(int n, const UnitIntervalMeasure& reproduction_law, double migration_rate,
                     double scale) {
  if (n < 1 || n > 10) throw std::invalid_argument("p_total_check needs 1 <= n <= 10");
  SamplingRecursion rec(reproduction_law, migration_rate, scale);
  double total = 0.0;
  for (const auto& c : allele_configs(n)) total += rec.configuration_probability(c);
  return std::abs(total - 1.0);
}

}  // namespace demecoal
