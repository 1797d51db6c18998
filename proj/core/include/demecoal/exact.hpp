#pragma once

#include <map>
#include <vector>

#include "demecoal/measures.hpp"
#include "demecoal/partition.hpp"
#include "demecoal/rates.hpp"

namespace demecoal {

/// Largest sample size accepted by the exact (enumerating) solvers.
inline constexpr int kMaxExactSize = 6;

/// Finite distribution over partitions, support in canonical order.
template <typename State>
struct DiscreteDistribution {
  std::vector<State> support;
  std::vector<double> probabilities;
  /// Upper bound on the probability mass lost to truncation, if any.
  double truncation_bound = 0.0;

  double probability(const State& s) const {
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (support[i] == s) return probabilities[i];
    }
    return 0.0;
  }
  double total() const {
    double t = 0.0;
    for (double p : probabilities) t += p;
    return t;
  }
};

using StructuredDistribution = DiscreteDistribution<StructuredPartition>;
using UnstructuredDistribution = DiscreteDistribution<UnstructuredPartition>;

UnstructuredDistribution unstructured_marginal(const StructuredDistribution& d);

/// Exact law of the scattered state in which the fast process started at a
/// given state gets absorbed, and its expected absorption time, by first-step
/// analysis. The fast chain is acyclic (each jump merges blocks or opens a
/// deme), so the first-step system is solved by memoized recursion.
class AbsorptionSolver {
 public:
  explicit AbsorptionSolver(ModelParams params);

  const std::map<StructuredPartition, double>& distribution(const StructuredPartition& start);
  double expected_time(const StructuredPartition& start);

 private:
  struct Solution {
    std::map<StructuredPartition, double> outcome;
    double expected_time = 0.0;
  };
  const Solution& solve(const StructuredPartition& state);

  ModelParams params_;
  std::map<StructuredPartition, Solution> memo_;
};

/// Refuses n above kMaxExactSize.
StructuredDistribution absorption_distribution_exact(const StructuredPartition& start,
                                                     const ModelParams& params);
double expected_absorption_time(const StructuredPartition& start, const ModelParams& params);

/// Sparse generator over an enumerated state space.
template <typename State>
struct Generator {
  std::vector<State> states;
  /// rows[i] lists (j, rate) for j != i; exit rates are implicit.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;

  std::size_t index_of(const State& s) const;
  double exit_rate(std::size_t i) const;
};

Generator<StructuredPartition> fast_generator(const ModelParams& params,
                                              const StructuredPartition& start);
/// Limit process on scattered states of [n]; ghost events are left out
/// because they do not move the chain.
Generator<StructuredPartition> slow_generator(const ModelParams& params, int n);
Generator<UnstructuredPartition> lambda_generator(const UnitIntervalMeasure& lambda, int n);
Generator<UnstructuredPartition> xi_generator(const XiMeasure& xi, int n);

/// Transient law at time t by uniformization. The result carries an upper
/// bound on the truncated Poisson tail mass, kept below `tolerance`.
template <typename State>
DiscreteDistribution<State> uniformized_transient(const Generator<State>& gen,
                                                  const State& start, double t,
                                                  double tolerance = 1e-12);

enum class ProcessKind { kFast, kSlow, kFiniteD, kLambdaReference, kXiReference };

const char* to_string(ProcessKind k);
ProcessKind parse_process_kind(const std::string& s);

/// What a process needs beyond its initial state.
struct ProcessModel {
  ProcessKind kind = ProcessKind::kSlow;
  ModelParams params;
  UnitIntervalMeasure lambda = UnitIntervalMeasure::dirac(0.0);
  XiMeasure xi = XiMeasure::kingman();
};

/// Law of the state at time t. Reference coalescents are reported through
/// their scattered structured form. Refuses n above 5, and the finite-D
/// process, whose state space depends on D.
StructuredDistribution transient_distribution_exact(const ProcessModel& model,
                                                    const StructuredPartition& start, double t);

inline constexpr int kMaxTransientSize = 5;

}  // namespace demecoal
