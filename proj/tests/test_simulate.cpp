#include <doctest.h>

#include <cmath>
#include <map>

#include "demecoal/combinatorics.hpp"
#include "demecoal/exact.hpp"
#include "demecoal/experiment.hpp"
#include "demecoal/simulate.hpp"

using namespace demecoal;

namespace {

ModelParams island(int N, double m) {
  ModelParams p;
  p.deme_size = N;
  p.reproduction_law = UnitIntervalMeasure::dirac(1.0);
  p.deme_rate_scale = 2.0 * (1.0 - m) / N;
  p.migration_rate = m;
  return p;
}

ModelParams model() {
  ModelParams p;
  p.deme_size = 3;
  p.source_demes = 2;
  p.migration_rate = 0.5;
  p.extinction_rate = 1.0;
  p.reproduction_law = UnitIntervalMeasure::dirac(0.5);
  p.extinction_law = UnitIntervalMeasure::dirac(0.5);
  return p;
}

/// Block count along a path must never increase.
bool monotone_blocks(const PathSample& path) {
  std::size_t last = unstructured(path.initial).size();
  for (const auto& e : path.events) {
    const auto b = unstructured(e.state).size();
    if (b > last) return false;
    last = b;
  }
  return true;
}

}  // namespace

TEST_CASE("exact absorption") {
  const auto pair = parse_structured("1;2");
  for (auto [N, m] : std::vector<std::pair<int, double>>{{1, 0.5}, {10, 0.1}, {100, 0.01}}) {
    const auto d = absorption_distribution_exact(pair, island(N, m));
    CHECK(std::abs(d.probability(parse_structured("1,2")) - (1 - m) / (1 - m + N * m)) < 1e-12);
    CHECK(std::abs(d.total() - 1.0) < 1e-12);
    CHECK(std::abs(expected_absorption_time(pair, island(N, m)) - N / (2 * m * N + 2 * (1 - m))) < 1e-12);
  }
  const auto s = StructuredPartition::scattered_singletons(4);
  const auto point = absorption_distribution_exact(s, model());
  CHECK(point.support.size() == 1);
  CHECK(point.probabilities[0] == 1.0);
  CHECK_THROWS(absorption_distribution_exact(StructuredPartition::single_deme_singletons(7), model()));
}

TEST_CASE("fast process simulation") {
  auto p = model();
  Rng rng(1);
  const auto s = StructuredPartition::scattered_singletons(4);
  int transitions = -1;
  CHECK(run_fast_to_absorption(s, p, rng, &transitions) == s);
  CHECK(transitions == 0);

  ModelParams no_moves = p;
  no_moves.migration_rate = 0.0;
  CHECK(to_string(run_fast_to_absorption(StructuredPartition::single_deme_singletons(5), no_moves, rng)) ==
        "1,2,3,4,5");

  // Two co-resident blocks merge with probability c λ2 / (c λ2 + 2 m1).
  ModelParams scaled = p;
  scaled.deme_rate_scale = 3.0;
  const double l2 = 3.0 * 0.25;
  const double expected = l2 / (l2 + 2 * 0.5);
  const int reps = 100000;
  int merged = 0;
  const auto pair = parse_structured("1;2");
  for (int i = 0; i < reps; ++i) {
    int t = 0;
    merged += run_fast_to_absorption(pair, scaled, rng, &t).block_count() == 1;
    CHECK(t <= 2);
  }
  CHECK(std::abs(merged / double(reps) - expected) < 3 * std::sqrt(expected * (1 - expected) / reps));

  // At most n transitions, and the law matches the exact solver.
  const auto start = StructuredPartition::single_deme_singletons(4);
  const auto exact = exact_structured_law(absorption_distribution_exact(start, p));
  Empirical e;
  for (int i = 0; i < 20000; ++i) {
    int t = 0;
    e.add(to_string(run_fast_to_absorption(start, p, rng, &t)));
    CHECK(t <= 4);
  }
  CHECK(chi_square_gof(e, exact).pass);
}

TEST_CASE("limit process basics") {
  auto p = model();
  Rng rng(2);
  const auto one = simulate_limit_process(StructuredPartition::scattered_singletons(1), p, {}, rng);
  CHECK(one.events.empty());

  // K=1, m1=0: pairs merge at rate e y^2.
  ModelParams q;
  q.deme_size = 4;
  q.source_demes = 1;
  q.extinction_rate = 2.0;
  q.extinction_law = UnitIntervalMeasure::dirac(0.5);
  const LimitProcess lp(q, 2);
  const int reps = 10000;
  double sum = 0;
  for (int i = 0; i < reps; ++i) {
    const auto path = lp.simulate(StructuredPartition::scattered_singletons(2), {}, rng);
    CHECK(path.final_state().block_count() == 1);
    sum += path.terminal_time;
  }
  const double mean = 1.0 / (2.0 * 0.25);
  CHECK(std::abs(sum / reps - mean) < 3 * mean / std::sqrt(reps));

  // Non-scattered start: scatter at time zero first.
  const auto path = simulate_limit_process(parse_structured("1;2;3"), p, StopRule{1.0, true}, rng);
  REQUIRE_FALSE(path.events.empty());
  CHECK(path.events.front().time == 0.0);
  CHECK(path.events.front().kind == EventKind::kInstantaneousScatter);
  CHECK_THROWS(simulate_limit_process(parse_structured("1|2"), p, StopRule{0.0, true}, rng));

  for (int i = 0; i < 200; ++i) {
    const auto path = simulate_limit_process(StructuredPartition::scattered_singletons(5), p, {}, rng);
    CHECK(monotone_blocks(path));
    for (std::size_t j = 1; j < path.events.size(); ++j) CHECK(path.events[j].time >= path.events[j - 1].time);
  }
}

TEST_CASE("ghost collisions are kept and flagged") {
  auto p = model();
  p.migration_rate = 5.0;  // co-resident pairs usually separate again
  Rng rng(9);
  int ghosts = 0;
  for (int i = 0; i < 200; ++i) {
    const auto path = simulate_limit_process(StructuredPartition::scattered_singletons(3), p, {}, rng);
    for (const auto& e : path.events) ghosts += e.same_state;
  }
  CHECK(ghosts > 0);
}

TEST_CASE("limit process agrees with the uniformization oracle") {
  auto p = model();
  const auto start = StructuredPartition::scattered_singletons(3);
  const auto exact = exact_structured_law(transient_distribution_exact({ProcessKind::kSlow, p}, start, 1.0));
  const LimitProcess lp(p, 3);
  Empirical e;
  Rng rng(4);
  for (int i = 0; i < 20000; ++i) e.add(to_string(lp.simulate(start, StopRule{1.0, true}, rng).state_at(1.0)));
  CHECK(chi_square_gof(e, exact).pass);
}

TEST_CASE("transient oracle") {
  auto p = model();
  const auto start = StructuredPartition::scattered_singletons(2);
  const auto at0 = transient_distribution_exact({ProcessKind::kSlow, p}, start, 0.0);
  CHECK(at0.probability(start) == 1.0);

  // Two lineages: merged by t with probability 1 - exp(-q t).
  const auto gen = slow_generator(p, 2);
  const double q = gen.exit_rate(gen.index_of(start));
  for (double t : {0.3, 1.0, 4.0}) {
    const auto d = transient_distribution_exact({ProcessKind::kSlow, p}, start, t);
    CHECK(std::abs(d.probability(parse_structured("1,2")) - (1 - std::exp(-q * t))) < 1e-10);
    CHECK(d.truncation_bound < 1e-10);
  }
  const auto fast = transient_distribution_exact({ProcessKind::kFast, p},
                                                 StructuredPartition::single_deme_singletons(3), 200.0);
  double off = 0;
  for (std::size_t i = 0; i < fast.support.size(); ++i) {
    if (!is_scattered(fast.support[i])) off += fast.probabilities[i];
  }
  CHECK(off < 1e-10);
  CHECK_THROWS(transient_distribution_exact({ProcessKind::kSlow, p}, StructuredPartition::scattered_singletons(6), 1.0));
}

TEST_CASE("finite-D simulation") {
  Rng rng(6);
  // Pure within-deme Lambda-coalescent: first merger sizes follow C(b,k) rates.
  ModelParams p;
  p.deme_size = 10;
  p.reproduction_law = UnitIntervalMeasure::dirac(0.5);
  const auto start = StructuredPartition::single_deme_singletons(4);
  std::map<int, long> sizes;
  const int reps = 10000;
  for (int i = 0; i < reps; ++i) {
    const auto path = simulate_finite_d(start, p, FiniteDConfig{50, true}, {}, rng);
    REQUIRE_FALSE(path.events.empty());
    sizes[5 - path.events.front().state.block_count()]++;
  }
  double total = 0;
  std::map<int, double> w;
  for (int k = 2; k <= 4; ++k) total += w[k] = combinatorics::binomial(4, k) * moment(p.reproduction_law, k, 4 - k);
  for (int k = 2; k <= 4; ++k) {
    const double f = w[k] / total;
    CHECK(std::abs(sizes[k] / double(reps) - f) < 3 * std::sqrt(f * (1 - f) / reps) + 1e-3);
  }

  // y = 1, K = 1: one extinction gathers everything into one deme.
  ModelParams ext;
  ext.deme_size = 1;
  ext.source_demes = 1;
  ext.extinction_rate = 1.0;
  ext.extinction_law = UnitIntervalMeasure::dirac(1.0);
  const auto path = simulate_finite_d(StructuredPartition::scattered_singletons(4), ext, FiniteDConfig{100, true}, {}, rng);
  REQUIRE(path.events.size() == 1);
  CHECK(path.events[0].kind == EventKind::kExtinctionCollision);
  CHECK(to_string(path.events[0].state) == "1,2,3,4");

  CHECK_THROWS(simulate_finite_d(StructuredPartition::scattered_singletons(4), ext, FiniteDConfig{3, true}, {}, rng));

  // Natural units stretch times by D.
  Rng a(3), b(3);
  const auto slow = simulate_finite_d(StructuredPartition::scattered_singletons(3), model(), FiniteDConfig{40, true}, {}, a);
  const auto natural = simulate_finite_d(StructuredPartition::scattered_singletons(3), model(), FiniteDConfig{40, false}, {}, b);
  REQUIRE(slow.events.size() == natural.events.size());
  CHECK(natural.terminal_time == doctest::Approx(40 * slow.terminal_time));
}

TEST_CASE("reference coalescents") {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto path = simulate_lambda_coalescent(UnitIntervalMeasure::dirac(0.0), 6, rng);
    for (const auto& j : unstructured_jumps(path)) CHECK(j.before.size() == j.after.size() + 1);
  }
  const auto star = simulate_lambda_coalescent(UnitIntervalMeasure::dirac(1.0), 6, rng);
  REQUIRE(star.events.size() == 1);
  CHECK(star.events[0].state.block_count() == 1);

  XiMeasure two{0.0, {{{0.5, 0.5}, 1.0}}};
  int double_mergers = 0;
  for (int i = 0; i < 2000; ++i) {
    for (const auto& j : unstructured_jumps(simulate_xi_coalescent(two, 4, rng))) {
      const auto g = merger_groups(j.before, j.after);
      double_mergers += g && g->size() == 2;
    }
  }
  CHECK(double_mergers > 0);

  // Lambda block-counting chain against the exact transient law.
  const auto lambda = UnitIntervalMeasure::beta(2, 2);
  ProcessModel m;
  m.kind = ProcessKind::kLambdaReference;
  m.lambda = lambda;
  const auto start = StructuredPartition::scattered_singletons(4);
  const auto exact = transient_distribution_exact(m, start, 0.7);
  std::map<std::string, double> by_count;
  for (std::size_t i = 0; i < exact.support.size(); ++i) by_count[std::to_string(exact.support[i].block_count())] += exact.probabilities[i];
  Empirical e;
  for (int i = 0; i < 20000; ++i) e.add(std::to_string(simulate_lambda_coalescent(lambda, 4, rng).state_at(0.7).block_count()));
  CHECK(chi_square_gof(e, by_count).pass);
}

TEST_CASE("path CSV round trip and jumps") {
  Rng rng(21);
  const auto path = simulate_limit_process(parse_structured("1;2|3|4"), model(), StopRule{2.0, true}, rng);
  const auto csv = to_csv(path);
  CHECK(csv.rfind("time,kind,partition\n0,initial,1;2|3|4\n", 0) == 0);
  const auto back = path_from_csv(csv);
  CHECK(back.initial == path.initial);
  REQUIRE(back.events.size() == path.events.size());
  for (std::size_t i = 0; i < path.events.size(); ++i) {
    CHECK(back.events[i].time == path.events[i].time);
    CHECK(back.events[i].kind == path.events[i].kind);
    CHECK(back.events[i].state == path.events[i].state);
    CHECK(back.events[i].same_state == path.events[i].same_state);
  }
  CHECK(back.terminal_time == path.terminal_time);
  CHECK_THROWS(path_from_csv("t,k,p\n"));
  for (const auto& j : unstructured_jumps(path)) CHECK(j.before != j.after);
}

TEST_CASE("relabeling leaves block-size statistics unchanged") {
  // Exchangeability: the block-size profile at t does not depend on which labels start together.
  auto p = model();
  const LimitProcess lp(p, 4);
  Rng rng(31);
  Empirical a, b;
  for (int i = 0; i < 20000; ++i) {
    auto pa = lp.simulate(parse_structured("1;2|3|4"), StopRule{0.8, true}, rng).state_at(0.8);
    auto pb = lp.simulate(parse_structured("1|2|3;4"), StopRule{0.8, true}, rng).state_at(0.8);
    auto key = [](const StructuredPartition& s) {
      std::string k;
      for (int x : block_size_profile(unstructured(s))) k += std::to_string(x);
      return k;
    };
    a.add(key(pa));
    b.add(key(pb));
  }
  const auto r = tv_distance(a, b, 1);
  CHECK(r.estimate <= 3 * r.standard_error);
}

TEST_CASE("tabulated collision totals match the concrete rows") {
  auto p = model();
  p.source_demes = 3;
  const LimitProcess lp(p, 6);
  for (int m = 2; m <= 6; ++m) {
    const double concrete = slow_rates(p, StructuredPartition::scattered_singletons(m)).total();
    CHECK(std::abs(lp.total_rate(m) - concrete) < 1e-12 * concrete);
  }
}

TEST_CASE("multi-step scattering keeps every logged state intact") {
  // m1 = 0 forces several within-deme mergers per collision, which grows the
  // event log while the scattering phase is still running.
  auto p = model();
  p.source_demes = 1;
  p.migration_rate = 0.0;
  const LimitProcess lp(p, 6);
  Rng rng(77);
  for (int i = 0; i < 500; ++i) {
    const auto path = lp.simulate(StructuredPartition::scattered_singletons(6), {}, rng);
    for (const auto& e : path.events) REQUIRE(e.state.n() == 6);
    for (const auto& j : unstructured_jumps(path)) {
      REQUIRE(j.after.n == 6);
      CHECK(merger_label(j).has_value());
    }
  }
}
