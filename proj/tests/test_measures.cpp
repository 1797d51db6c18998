#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "demecoal/combinatorics.hpp"
#include "demecoal/measures.hpp"
#include "oracles.hpp"

using namespace demecoal;
namespace cb = demecoal::combinatorics;

TEST_CASE("moments of atoms and Beta laws") {
  CHECK(moment(UnitIntervalMeasure::dirac(1.0), 2, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(moment(UnitIntervalMeasure::dirac(0.5), 1, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(std::abs(moment(UnitIntervalMeasure::beta(2, 2), 2, 0) - 0.3) < 1e-12);
  const double quad = oracle::tanh_sinh([](double x, double y) { return x * x * oracle::beta_density(x, y, 2, 2); });
  CHECK(std::abs(quad - 0.3) < 1e-12);
  CHECK(std::abs(moment(UnitIntervalMeasure::uniform(), 1, 0) -
                 oracle::tanh_sinh([](double x, double) { return x; })) < 1e-12);
  CHECK(moment(UnitIntervalMeasure::dirac(0.3, 2.5), 0, 0) == doctest::Approx(2.5));
}

TEST_CASE("closed-form moments agree with quadrature") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = oracle::random_probability_measure(rng);
    const int j = static_cast<int>(rng.below(6));
    const int l = static_cast<int>(rng.below(5));
    double expected = 0.0;
    for (const auto& a : m.atoms) expected += a.weight * std::pow(a.location, j) * std::pow(1 - a.location, l);
    for (const auto& b : m.betas) {
      expected += b.weight * oracle::tanh_sinh([&](double x, double y) {
        return std::pow(x, j) * std::pow(y, l) * oracle::beta_density(x, y, b.alpha, b.beta);
      });
    }
    CHECK(std::abs(moment(m, j, l) - expected) < 1e-10);
  }
}

TEST_CASE("moment identities") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = oracle::random_probability_measure(rng);
    CHECK(std::abs(moment(m, 0, 0) - m.total_mass()) < 1e-12);
    for (int b = 0; b <= 12; ++b) {
      double s = 0;
      for (int k = 0; k <= b; ++k) s += static_cast<double>(cb::binomial(b, k)) * moment(m, k, b - k);
      CHECK(std::abs(s - m.total_mass()) < 1e-12);
    }
    CHECK(moment(m, 3, 2) <= moment(m, 2, 2) + 1e-15);
    CHECK(moment(m, 3, 2) <= moment(m, 3, 1) + 1e-15);
  }
  CHECK_THROWS(moment(UnitIntervalMeasure::uniform(), 40, 30));
}

TEST_CASE("sampling") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(sample(UnitIntervalMeasure::dirac(0.3), rng) == 0.3);

  UnitIntervalMeasure mix;
  mix.atoms = {{0.2, 0.5}, {0.8, 0.5}};
  const int draws = 100000;
  double sum = 0;
  for (int i = 0; i < draws; ++i) sum += sample(mix, rng);
  CHECK(std::abs(sum / draws - 0.5) < 3 * 0.3 / std::sqrt(draws));

  sum = 0;
  for (int i = 0; i < draws; ++i) sum += sample(UnitIntervalMeasure::beta(2, 2), rng);
  CHECK(std::abs(sum / draws - 0.5) < 3 * std::sqrt(0.05 / draws));

  CHECK_THROWS(sample(UnitIntervalMeasure::dirac(0.5, 0.9), rng));
  Rng a(42), b(42);
  CHECK(sample(UnitIntervalMeasure::beta(2, 3), a) == sample(UnitIntervalMeasure::beta(2, 3), b));
}

TEST_CASE("validation diagnostics") {
  CHECK_FALSE(validate(UnitIntervalMeasure::dirac(0.0), MeasureRole::kModelProbability).ok());
  CHECK(validate(UnitIntervalMeasure::dirac(0.0), MeasureRole::kFinite).ok());
  UnitIntervalMeasure short_mass;
  short_mass.atoms = {{0.3, 0.5}, {0.6, 0.4}};
  const auto d = validate(short_mass, MeasureRole::kModelProbability);
  CHECK(d.not_normalized);
  CHECK_FALSE(d.ok());
  CHECK_FALSE(validate(UnitIntervalMeasure::dirac(1.5), MeasureRole::kFinite).ok());
}

TEST_CASE("measure JSON round trip") {
  UnitIntervalMeasure m;
  m.atoms = {{0.25, 0.5}};
  m.betas = {{2.0, 3.0, 0.5}};
  const auto j = to_json(m);
  CHECK(j.dump() == R"({"atoms":[[0.25,0.5]],"beta":[[2.0,3.0,0.5]]})");
  const auto back = measure_from_json(j);
  CHECK(moment(back, 2, 1) == moment(m, 2, 1));

  XiMeasure xi;
  xi.kingman_mass = 0.5;
  xi.atoms = {{{0.5, 0.25}, 2.0}};
  const auto xj = xi_from_json(to_json(xi));
  CHECK(xj.kingman_mass == 0.5);
  CHECK(xj.atoms.at(0).coordinates == std::vector<double>{0.5, 0.25});
  CHECK_THROWS(normalized(XiMeasure{0.0, {{{0.7, 0.6}, 1.0}}}));
  CHECK_THROWS(normalized(XiMeasure{0.0, {{{0.0}, 1.0}}}));
}

TEST_CASE("combinatorial counts") {
  CHECK(cb::binomial(5, 2) == 10);
  CHECK(cb::factorial(10) == 3628800);
  CHECK(cb::falling_factorial(5, 2) == 20);

  // Brute force: unordered groupings of labeled items with given sizes.
  auto brute = [](std::vector<int> sizes) {
    int k = 0;
    for (int s : sizes) k += s;
    std::vector<int> labels(k);
    for (int i = 0; i < k; ++i) labels[i] = i;
    std::sort(sizes.begin(), sizes.end());
    long count = 0;
    for (const auto& p : oracle::set_partitions(labels)) {
      std::vector<int> got;
      for (const auto& s : p) got.push_back(static_cast<int>(s.size()));
      std::sort(got.begin(), got.end());
      if (got == sizes) ++count;
    }
    return count;
  };
  CHECK(cb::unordered_split_count({2, 2}) == 3);
  CHECK(cb::unordered_split_count({2, 1}) == 3);
  for (const auto& sizes : std::vector<std::vector<int>>{{2, 2}, {2, 1}, {3, 2, 1}, {2, 2, 2}, {1, 1, 1}, {4}, {3, 3}}) {
    CHECK(static_cast<long>(cb::unordered_split_count(sizes)) == brute(sizes));
  }
  // p(n): 1, 2, 3, 5, 7, 11, 15, 22
  const std::vector<std::size_t> counts{1, 2, 3, 5, 7, 11, 15, 22};
  for (int n = 1; n <= 8; ++n) CHECK(cb::integer_partitions(n).size() == counts[n - 1]);
}
