#include <doctest.h>

#include <cmath>
#include <map>

#include "demecoal/combinatorics.hpp"
#include "demecoal/exact.hpp"
#include "demecoal/sampling.hpp"
#include "oracles.hpp"

using namespace demecoal;

namespace {

AlleleConfig C(std::vector<int> c) { return AlleleConfig::from_counts(std::move(c)); }

}  // namespace

TEST_CASE("allele configurations") {
  CHECK(to_string(C({1, 3, 1})) == "3+1+1");
  CHECK(parse_allele_config("1+2") == C({2, 1}));
  CHECK(C({2, 2}).multiplicity() == 3);
  CHECK(C({3, 1}).multiplicity() == 4);
  CHECK(allele_configs(4).size() == 5);
  CHECK_THROWS(C({}));
  CHECK_THROWS(C({2, 0}));
}

TEST_CASE("small cases of the recursion") {
  const auto law = UnitIntervalMeasure::beta(2, 5);
  const double m1 = 0.35;
  CHECK(p_allele_config(C({1}), law, m1) == 1.0);
  const double l2 = moment(law, 2, 0);
  CHECK(std::abs(p_allele_config(C({2}), law, m1) - l2 / (l2 + 2 * m1)) < 1e-15);
  const double g2 = g_rates(law, 2).total_from_sum;
  CHECK(std::abs(p_allele_config(C({1, 1}), law, m1) - 2 * m1 / (g2 + 2 * m1)) < 1e-15);
  CHECK(p_total_check(2, law, m1) < 1e-15);
}

TEST_CASE("recursion matches the absorption solver") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    ModelParams p;
    p.reproduction_law = oracle::random_probability_measure(rng);
    p.migration_rate = 0.05 + rng.uniform();
    p.deme_rate_scale = trial == 0 ? 1.0 : 0.5 + 2 * rng.uniform();
    SamplingRecursion rec(p.reproduction_law, p.migration_rate, p.deme_rate_scale);
    for (int n = 1; n <= 5; ++n) {
      const auto exact = absorption_distribution_exact(StructuredPartition::single_deme_singletons(n), p);
      std::map<AlleleConfig, double> by_config;
      for (std::size_t i = 0; i < exact.support.size(); ++i) {
        const auto c = AlleleConfig::from_counts(block_size_profile(unstructured(exact.support[i])));
        CHECK(std::abs(rec.labeled_probability(c) - exact.probabilities[i]) < 1e-10);
        by_config[c] += exact.probabilities[i];
      }
      for (const auto& [c, prob] : by_config) CHECK(std::abs(rec.configuration_probability(c) - prob) < 1e-10);
    }
  }
}

TEST_CASE("literal recursion gives the ordered-vector law") {
  const auto law = UnitIntervalMeasure::dirac(0.4);
  SamplingRecursion rec(law, 0.7);
  // (2,1) from three lineages: V = P(labeled) * 3! / (2! 2! 1!).
  CHECK(std::abs(rec.ordered_probability(C({2, 1})) - 1.5 * rec.labeled_probability(C({2, 1}))) < 1e-15);
  // The ordered law sums to one over compositions.
  double total = 0;
  for (const auto& c : allele_configs(5)) {
    std::map<int, int> mult;
    for (int x : c.counts) ++mult[x];
    double orderings = combinatorics::factorial(c.k());
    for (const auto& [x, m] : mult) orderings /= combinatorics::factorial(m);
    total += orderings * rec.ordered_probability(c);
  }
  CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("normalization and limits") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto law = oracle::random_probability_measure(rng);
    const double m1 = 0.05 + 2 * rng.uniform();
    for (int n = 1; n <= 8; ++n) CHECK(p_total_check(n, law, m1) < 1e-10);
  }
  const auto law = UnitIntervalMeasure::beta(2, 2);
  double previous = 0.0;
  for (double m1 : {0.1, 1.0, 10.0, 1000.0}) {
    const double p = p_allele_config(C({1, 1, 1, 1}), law, m1);
    CHECK(p >= previous);
    previous = p;
  }
  CHECK(previous > 0.999);
  CHECK_THROWS(p_allele_config(C({31}), law, 1.0));
  CHECK_THROWS(p_total_check(11, law, 1.0));
}
