// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "demecoal/combinatorics.hpp"
#include "demecoal/consistency.hpp"
#include "demecoal/exact.hpp"
#include "demecoal/experiment.hpp"
#include "demecoal/sampling.hpp"

using namespace demecoal;
namespace cb = demecoal::combinatorics;

namespace {

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

ModelParams island(int N, double m) {
  ModelParams p;
  p.deme_size = N;
  p.reproduction_law = UnitIntervalMeasure::dirac(1.0);
  p.deme_rate_scale = 2.0 * (1.0 - m) / N;
  p.migration_rate = m;
  return p;
}

ModelParams reference_model() {
  ModelParams p;
  p.deme_size = 3;
  p.source_demes = 2;
  p.migration_rate = 0.5;
  p.extinction_rate = 1.0;
  p.reproduction_law = UnitIntervalMeasure::dirac(0.5);
  p.extinction_law = UnitIntervalMeasure::dirac(0.5);
  return p;
}

UnitIntervalMeasure random_law(Rng& rng, bool atomic) {
  if (atomic) {
    UnitIntervalMeasure m;
    const double w = 0.2 + 0.6 * rng.uniform();
    m.atoms = {{0.05 + 0.9 * rng.uniform(), w}, {0.05 + 0.9 * rng.uniform(), 1 - w}};
    return m;
  }
  return UnitIntervalMeasure::beta(0.5 + 3 * rng.uniform(), 0.5 + 3 * rng.uniform());
}

// 1. Escape probability in the island model.
Outcome island_escape() {
  Outcome o;
  const auto pair = parse_structured("1;2");
  const auto merged = parse_structured("1,2");
  std::uint64_t seed = 100;
  for (auto [N, m] : std::vector<std::pair<int, double>>{{1, 0.5}, {10, 0.1}, {100, 0.01}}) {
    const auto p = island(N, m);
    const double chi = (1 - m) / (1 - m + N * m);
    const double exact = absorption_distribution_exact(pair, p).probability(merged);
    o.require(std::abs(exact - chi) <= 1e-12, fmt("N=%g exact %.15f vs %.15f", N, exact, chi));
    const long reps = 100000;
    const auto hits = parallel_replicates(reps, seed++, jobs(), [&](long, Rng& rng) {
      return run_fast_to_absorption(pair, p, rng).block_count() == 1 ? 1 : 0;
    });
    const double f = static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / reps;
    const double sigma = std::sqrt(chi * (1 - chi) / reps);
    o.require(std::abs(f - chi) <= 3 * sigma, fmt("MC %.5f (3sd %.5f)", f, 3 * sigma));
  }
  return o;
}

// 2. Mean duration of the fast phase.
Outcome fast_duration() {
  Outcome o;
  for (auto [N, m] : std::vector<std::pair<int, double>>{{1, 0.5}, {10, 0.1}, {100, 0.01}}) {
    const double t = expected_absorption_time(parse_structured("1;2"), island(N, m));
    const double ref = N / (2 * m * N + 2 * (1 - m));
    o.require(std::abs(t - ref) <= 1e-12, fmt("N=%g %.15g vs %.15g", N, t, ref));
  }
  return o;
}

// 3. Kingman part of the limit coalescent.
Outcome kingman_part() {
  Outcome o;
  ModelParams p;
  p.deme_size = 5;
  p.migration_rate = 0.3;
  p.extinction_rate = 0.0;
  p.reproduction_law = UnitIntervalMeasure::beta(2, 3);
  p.deme_rate_scale = 1.0;
  const double m1 = p.migration_rate;
  const double N = p.deme_size;
  const double l2 = moment(p.reproduction_law, 2, 0);
  const double p2 = p_allele_config(AlleleConfig::from_counts({2}), p.reproduction_law, m1);
  const double composed = 2 * m1 / N + 2 * m1 * (N - 1) / N * p2;
  const double closed = 2 * m1 / N * (1 + (N - 1) * l2 / (l2 + 2 * m1));
  o.require(std::abs(composed - closed) <= 1e-12, fmt("rate %.15g vs %.15g", composed, closed));
  const auto gen = slow_generator(p, 2);
  const double generator = gen.exit_rate(gen.index_of(StructuredPartition::scattered_singletons(2)));
  o.require(std::abs(generator - closed) <= 1e-12, fmt("generator %.15g", generator));

  const long reps = 10000;
  const LimitProcess lp(p, 2);
  const auto times = parallel_replicates(reps, 300, jobs(), [&](long, Rng& rng) {
    return lp.simulate(StructuredPartition::scattered_singletons(2), {}, rng).terminal_time;
  });
  double total = 0;
  for (double t : times) total += t;
  const double mle = reps / total;
  const double se = mle / std::sqrt(static_cast<double>(reps));
  o.require(std::abs(mle - closed) <= 3 * se, fmt("MLE %.5f +- %.5f", mle, se));
  return o;
}

// 4. Consistency equations.
Outcome consistency() {
  Outcome o;
  Rng rng(400);
  double worst_g = 0, worst_f = 0;
  for (int draw = 0; draw < 10; ++draw) {
    ModelParams p;
    p.deme_size = std::vector<int>{1, 2, 5}[draw % 3];
    p.source_demes = 1 + (draw / 3) % 3;
    p.migration_rate = rng.uniform();
    p.extinction_rate = 0.1 + rng.uniform();
    p.reproduction_law = random_law(rng, draw % 2 == 0);
    p.extinction_law = random_law(rng, draw % 2 == 1);
    worst_g = std::max(worst_g, check_lambda_g_consistency(p, 5).max_violation);
    worst_f = std::max(worst_f, check_fast_consistency(p, 5).max_violation);
  }
  o.require(worst_g < 1e-10, fmt("collision %.2e", worst_g));
  o.require(worst_f < 1e-10, fmt("fast %.2e", worst_f));
  return o;
}

// 5. K = 1 gives a Lambda-coalescent with Lambda^g driving the mergers.
Outcome one_source_deme() {
  Outcome o;
  ExperimentConfig c;
  c.model.kind = ProcessKind::kSlow;
  c.model.params.deme_size = 4;
  c.model.params.source_demes = 1;
  c.model.params.migration_rate = 0.0;
  c.model.params.extinction_rate = 1.0;
  c.model.params.extinction_law = UnitIntervalMeasure::dirac(0.5);
  c.model.params.reproduction_law = UnitIntervalMeasure::dirac(0.5);
  c.n = 5;
  const Simulator sim(c);
  const auto parts = parallel_replicates(10000, 500, jobs(), [&](long, Rng& rng) {
    RateAccumulator acc;
    acc.add(sim.run(StructuredPartition::scattered_singletons(5), {}, rng));
    return acc;
  });
  RateAccumulator acc;
  for (const auto& p : parts) acc.merge(p);
  int compared = 0;
  for (int m = 2; m <= 5; ++m) {
    for (int k = 2; k <= m; ++k) {
      const long events = acc.events(m, std::to_string(k));
      if (events < 100) continue;
      ++compared;
      const double per_set = static_cast<double>(cb::binomial(m, k)) * acc.exposure(m);
      const double est = events / per_set;
      const double se = std::sqrt(static_cast<double>(events)) / per_set;
      const double ref = moment(c.model.params.extinction_law, k, m - k);
      const double tol = std::max(0.05 * ref, 3 * se);
      o.require(std::abs(est - ref) <= tol, fmt("m=%g k=%g: %.5f vs %.5f", m, k, est, ref));
    }
  }
  o.require(compared > 0, "compared " + std::to_string(compared) + " merger classes");
  return o;
}

// 6. Many source demes: binary mergers dominate.
Outcome many_source_demes() {
  Outcome o;
  ExperimentConfig c;
  c.model.kind = ProcessKind::kSlow;
  c.model.params.deme_size = 4;
  c.model.params.migration_rate = 0.0;
  c.model.params.extinction_rate = 1.0;
  c.model.params.extinction_law = UnitIntervalMeasure::dirac(0.5);
  c.model.params.reproduction_law = UnitIntervalMeasure::dirac(0.5);
  c.n = 4;
  c.replicates = 10000;
  c.seed = 600;
  const auto rows = k_sweep(c, {1, 2, 5, 20, 50}, jobs());
  std::string table;
  for (const auto& r : rows) table += fmt(" K=%g:%.4f/%.4f", r.K, r.pair_rate_times_k, r.multiple_frequency);
  const auto& last = rows.back();
  ComparisonReport rep;
  rep.estimate = last.pair_rate_times_k;
  rep.standard_error = last.pair_rate_se;
  rep.reference = 0.25;
  rep.tolerance = 0.025;
  o.require(rep.decide().pass, fmt("K=50 pair rate x K %.4f +- %.4f vs 0.25", rep.estimate, rep.standard_error));
  o.require(last.multiple_frequency < 0.01, fmt("K=50 multiple-merger share %.4f", last.multiple_frequency));
  o.detail += ";" + table;
  return o;
}

// 7. Finite-D process approaches the limit.
Outcome finite_d_convergence() {
  Outcome o;
  ExperimentConfig c;
  c.model.params = reference_model();
  c.n = 3;
  c.times = {0.5};
  c.replicates = 100000;
  c.seed = 700;
  c.finite_d.time_rescale = true;
  const auto rows = converge_d(c, {30, 100, 300, 1000}, jobs());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& tv = rows[i].tv;
    o.detail += (i ? "; " : "") + fmt("D=%g TV %.4f+-%.4f", static_cast<double>(rows[i].demes), tv.estimate, tv.standard_error);
    if (i > 0) {
      const auto& prev = rows[i - 1].tv;
      o.require(tv.estimate <= prev.estimate + 2 * std::hypot(tv.standard_error, prev.standard_error),
                "non-increasing");
    }
  }
  o.require(rows.back().tv.estimate < 0.05, "TV < 0.05 at D=1000");
  return o;
}

// 8. Simulators against the uniformization oracle.
Outcome oracle_equivalence() {
  Outcome o;
  struct Case {
    std::string name;
    ProcessModel model;
    StructuredPartition start;
    std::vector<double> times;
  };
  ProcessModel fast{ProcessKind::kFast, reference_model()};
  ProcessModel slow{ProcessKind::kSlow, reference_model()};
  ProcessModel lambda;
  lambda.kind = ProcessKind::kLambdaReference;
  lambda.lambda = UnitIntervalMeasure::beta(1, 1);
  const std::vector<Case> cases{
      {"fast", fast, StructuredPartition::single_deme_singletons(3), {0.5, 2.0}},
      {"slow", slow, StructuredPartition::scattered_singletons(3), {0.5, 1.5}},
      {"lambda", lambda, StructuredPartition::scattered_singletons(3), {0.3, 1.0}},
  };
  std::uint64_t seed = 800;
  for (const auto& cs : cases) {
    ExperimentConfig c;
    c.model = cs.model;
    c.n = 3;
    const Simulator sim(c);
    StopRule stop;
    stop.horizon = cs.times.back();
    const auto states = parallel_replicates(100000, seed++, jobs(), [&](long, Rng& rng) {
      const auto path = sim.run(cs.start, stop, rng);
      std::vector<std::string> at;
      for (double t : cs.times) at.push_back(to_string(path.state_at(t)));
      return at;
    });
    for (std::size_t i = 0; i < cs.times.size(); ++i) {
      Empirical e;
      for (const auto& s : states) e.add(s[i]);
      const auto exact = exact_structured_law(transient_distribution_exact(cs.model, cs.start, cs.times[i]));
      const auto g = chi_square_gof(e, exact);
      o.require(g.pass, cs.name + fmt(" t=%g chi2 %.2f <= %.2f (df %g)", cs.times[i], g.statistic, g.threshold,
                                      g.degrees_of_freedom));
    }
  }
  return o;
}

// 9. Sampling recursion against the absorption solver.
Outcome sampling_recursion() {
  Outcome o;
  Rng rng(900);
  double worst = 0, worst_total = 0;
  for (int draw = 0; draw < 10; ++draw) {
    ModelParams p;
    p.reproduction_law = random_law(rng, draw % 2 == 0);
    p.migration_rate = 0.05 + 2 * rng.uniform();
    SamplingRecursion rec(p.reproduction_law, p.migration_rate);
    for (int n = 1; n <= 5; ++n) {
      const auto exact = absorption_distribution_exact(StructuredPartition::single_deme_singletons(n), p);
      for (std::size_t i = 0; i < exact.support.size(); ++i) {
        const auto c = AlleleConfig::from_counts(block_size_profile(unstructured(exact.support[i])));
        worst = std::max(worst, std::abs(rec.labeled_probability(c) - exact.probabilities[i]));
      }
    }
    for (int n = 1; n <= 8; ++n) {
      worst_total = std::max(worst_total, p_total_check(n, p.reproduction_law, p.migration_rate));
    }
  }
  o.require(worst < 1e-10, fmt("max |recursion - solver| %.2e", worst));
  o.require(worst_total < 1e-10, fmt("max normalization error %.2e", worst_total));
  return o;
}

// 10. Sampling consistency of the limit process.
Outcome sampling_consistency() {
  Outcome o;
  const auto p = reference_model();
  const LimitProcess lp(p, 4);
  const StopRule stop{1.0, true};
  const long reps = 100000;
  auto run = [&](int n, std::uint64_t seed) {
    const auto keys = parallel_replicates(reps, seed, jobs(), [&](long, Rng& rng) {
      const auto s = lp.simulate(StructuredPartition::scattered_singletons(n), stop, rng).state_at(1.0);
      return to_string(restrict_to(unstructured(s), 3));
    });
    Empirical e;
    for (const auto& k : keys) e.add(k);
    return e;
  };
  const auto direct = run(3, 1000);
  const auto restricted = run(4, 1001);
  const auto tv = tv_distance(direct, restricted, 1002);
  o.require(tv.estimate < 3 * tv.standard_error, fmt("TV %.4f < 3 x %.4f", tv.estimate, tv.standard_error));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"island escape probability", island_escape},
      {"mean fast-phase duration", fast_duration},
      {"Kingman part of the pair rate", kingman_part},
      {"consistency equations", consistency},
      {"K=1 Lambda-coalescent rates", one_source_deme},
      {"large-K Kingman limit", many_source_demes},
      {"finite-D convergence", finite_d_convergence},
      {"simulators vs transient oracle", oracle_equivalence},
      {"sampling recursion vs absorption", sampling_recursion},
      {"sampling consistency of the limit", sampling_consistency},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu: %s (%.1fs) [%s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
