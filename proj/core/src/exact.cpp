#include "demecoal/exact.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace demecoal {

UnstructuredDistribution unstructured_marginal(const StructuredDistribution& d) {
  std::map<UnstructuredPartition, double> acc;
  for (std::size_t i = 0; i < d.support.size(); ++i) acc[unstructured(d.support[i])] += d.probabilities[i];
  UnstructuredDistribution out;
  out.truncation_bound = d.truncation_bound;
  for (auto& [s, p] : acc) {
    out.support.push_back(s);
    out.probabilities.push_back(p);
  }
  return out;
}

// Absorption ------------------------------------------------------------------------

AbsorptionSolver::AbsorptionSolver(ModelParams params) : params_(std::move(params)) {}

const AbsorptionSolver::Solution& AbsorptionSolver::solve(const StructuredPartition& state) {
  if (auto it = memo_.find(state); it != memo_.end()) return it->second;
  Solution sol;
  if (is_scattered(state)) {
    sol.outcome[state] = 1.0;
  } else {
    const auto row = fast_rates(params_, state);
    const double total = row.total();
    if (!(total > 0.0)) {
      throw std::logic_error("fast process stuck in non-scattered state " + to_string(state));
    }
    sol.expected_time = 1.0 / total;
    for (const auto& e : row.entries) {
      const double w = e.rate / total;
      const Solution& next = solve(e.target);
      sol.expected_time += w * next.expected_time;
      for (const auto& [s, p] : next.outcome) sol.outcome[s] += w * p;
    }
  }
  return memo_.emplace(state, std::move(sol)).first->second;
}

const std::map<StructuredPartition, double>& AbsorptionSolver::distribution(
    const StructuredPartition& start) {
  return solve(start).outcome;
}

double AbsorptionSolver::expected_time(const StructuredPartition& start) {
  return solve(start).expected_time;
}

namespace {

void check_exact_size(int n) {
  if (n > kMaxExactSize) {
    throw std::invalid_argument("exact solvers are limited to n <= " + std::to_string(kMaxExactSize) +
                                "; use Monte Carlo for larger samples");
  }
}

}  // namespace

StructuredDistribution absorption_distribution_exact(const StructuredPartition& start,
                                                     const ModelParams& params) {
  check_exact_size(start.n());
  AbsorptionSolver solver(params);
  StructuredDistribution out;
  for (const auto& [s, p] : solver.distribution(start)) {
    out.support.push_back(s);
    out.probabilities.push_back(p);
  }
  return out;
}

double expected_absorption_time(const StructuredPartition& start, const ModelParams& params) {
  check_exact_size(start.n());
  AbsorptionSolver solver(params);
  return solver.expected_time(start);
}

// Generators ----------------------------------------------------------------------------

template <typename State>
std::size_t Generator<State>::index_of(const State& s) const {
  const auto it = std::lower_bound(states.begin(), states.end(), s);
  if (it == states.end() || !(*it == s)) throw std::out_of_range("state not in generator");
  return static_cast<std::size_t>(it - states.begin());
}

template <typename State>
double Generator<State>::exit_rate(std::size_t i) const {
  double total = 0.0;
  for (const auto& [j, r] : rows[i]) total += r;
  return total;
}

template struct Generator<StructuredPartition>;
template struct Generator<UnstructuredPartition>;

Generator<StructuredPartition> fast_generator(const ModelParams& params,
                                              const StructuredPartition& start) {
  // States reachable from the start; the fast chain never leaves this set.
  std::map<StructuredPartition, RateRow<StructuredPartition>> rows;
  std::vector<StructuredPartition> frontier{start};
  while (!frontier.empty()) {
    auto s = std::move(frontier.back());
    frontier.pop_back();
    if (rows.contains(s)) continue;
    auto row = fast_rates(params, s);
    for (const auto& e : row.entries) {
      if (!rows.contains(e.target)) frontier.push_back(e.target);
    }
    rows.emplace(std::move(s), std::move(row));
  }
  Generator<StructuredPartition> gen;
  for (const auto& [s, row] : rows) gen.states.push_back(s);
  gen.rows.resize(gen.states.size());
  std::size_t i = 0;
  for (const auto& [s, row] : rows) {
    for (const auto& e : row.entries) gen.rows[i].emplace_back(gen.index_of(e.target), e.rate);
    ++i;
  }
  return gen;
}

Generator<StructuredPartition> slow_generator(const ModelParams& params, int n) {
  check_exact_size(n);
  Generator<StructuredPartition> gen;
  gen.states = enumerate_scattered(n);
  gen.rows.resize(gen.states.size());
  AbsorptionSolver solver(params);
  for (std::size_t i = 0; i < gen.states.size(); ++i) {
    const auto& chi = gen.states[i];
    std::map<std::size_t, double> acc;
    for (const auto& e : slow_rates(params, chi).entries) {
      const auto outcome = apply_collision(chi, *e.target.assignment);
      for (const auto& [eta, p] : solver.distribution(outcome)) {
        if (eta == chi) continue;
        acc[gen.index_of(eta)] += e.rate * p;
      }
    }
    for (const auto& [j, r] : acc) {
      if (r > 0.0) gen.rows[i].emplace_back(j, r);
    }
  }
  return gen;
}

namespace {

template <typename RateFn>
Generator<UnstructuredPartition> coarsening_generator(int n, RateFn rate) {
  check_exact_size(n);
  Generator<UnstructuredPartition> gen;
  gen.states = enumerate_set_partitions(n);
  gen.rows.resize(gen.states.size());
  for (std::size_t i = 0; i < gen.states.size(); ++i) {
    for (std::size_t j = 0; j < gen.states.size(); ++j) {
      if (i == j || gen.states[j].size() >= gen.states[i].size()) continue;
      const double r = rate(gen.states[i], gen.states[j]);
      if (r > 0.0) gen.rows[i].emplace_back(j, r);
    }
  }
  return gen;
}

}  // namespace

Generator<UnstructuredPartition> lambda_generator(const UnitIntervalMeasure& lambda, int n) {
  return coarsening_generator(n, [&](const auto& a, const auto& b) {
    return lambda_transition_rate(lambda, a, b);
  });
}

Generator<UnstructuredPartition> xi_generator(const XiMeasure& xi, int n) {
  return coarsening_generator(n, [&](const auto& a, const auto& b) {
    return xi_transition_rate(xi, a, b);
  });
}

// Uniformization ---------------------------------------------------------------------------

template <typename State>
DiscreteDistribution<State> uniformized_transient(const Generator<State>& gen, const State& start,
                                                  double t, double tolerance) {
  if (t < 0.0) throw std::invalid_argument("transient time must be >= 0");
  const std::size_t size = gen.states.size();
  std::vector<double> exit(size);
  double rate = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    exit[i] = gen.exit_rate(i);
    rate = std::max(rate, exit[i]);
  }
  std::vector<double> dist(size, 0.0);
  dist[gen.index_of(start)] = 1.0;
  DiscreteDistribution<State> out;
  if (rate > 0.0 && t > 0.0) {
    // Split the horizon so each piece has a moderate Poisson mean.
    constexpr double kMaxMeanPerPiece = 20.0;
    const auto pieces = static_cast<std::size_t>(std::ceil(rate * t / kMaxMeanPerPiece));
    const double dt = t / static_cast<double>(pieces);
    const double mean = rate * dt;
    const double piece_tolerance = tolerance / static_cast<double>(pieces);
    std::vector<double> term(size);
    std::vector<double> next(size);
    std::vector<double> acc(size);
    for (std::size_t piece = 0; piece < pieces; ++piece) {
      term = dist;
      double weight = std::exp(-mean);
      double cumulative = weight;
      for (std::size_t i = 0; i < size; ++i) acc[i] = weight * term[i];
      for (int k = 1; 1.0 - cumulative > piece_tolerance; ++k) {
        // term <- term * P with P = I + Q / rate.
        for (std::size_t i = 0; i < size; ++i) next[i] = term[i] * (1.0 - exit[i] / rate);
        for (std::size_t i = 0; i < size; ++i) {
          if (term[i] == 0.0) continue;
          for (const auto& [j, r] : gen.rows[i]) next[j] += term[i] * r / rate;
        }
        std::swap(term, next);
        weight *= mean / k;
        cumulative += weight;
        for (std::size_t i = 0; i < size; ++i) acc[i] += weight * term[i];
        if (k > 10000) throw std::runtime_error("uniformization failed to converge");
      }
      out.truncation_bound += std::max(0.0, 1.0 - cumulative);
      dist = acc;
    }
  }
  for (std::size_t i = 0; i < size; ++i) {
    if (dist[i] > 0.0) {
      out.support.push_back(gen.states[i]);
      out.probabilities.push_back(dist[i]);
    }
  }
  return out;
}

template DiscreteDistribution<StructuredPartition> uniformized_transient(
    const Generator<StructuredPartition>&, const StructuredPartition&, double, double);
template DiscreteDistribution<UnstructuredPartition> uniformized_transient(
    const Generator<UnstructuredPartition>&, const UnstructuredPartition&, double, double);

const char* to_string(ProcessKind k) {
  switch (k) {
    case ProcessKind::kFast: return "fast";
    case ProcessKind::kSlow: return "slow";
    case ProcessKind::kFiniteD: return "finite-d";
    case ProcessKind::kLambdaReference: return "lambda";
    case ProcessKind::kXiReference: return "xi";
  }
  return "?";
}

ProcessKind parse_process_kind(const std::string& s) {
  if (s == "fast") return ProcessKind::kFast;
  if (s == "slow" || s == "limit") return ProcessKind::kSlow;
  if (s == "finite-d" || s == "finite_d") return ProcessKind::kFiniteD;
  if (s == "lambda") return ProcessKind::kLambdaReference;
  if (s == "xi") return ProcessKind::kXiReference;
  throw std::invalid_argument("unknown process '" + s + "' (fast|slow|finite-d|lambda|xi)");
}

StructuredDistribution transient_distribution_exact(const ProcessModel& model,
                                                    const StructuredPartition& start, double t) {
  if (start.n() > kMaxTransientSize) {
    throw std::invalid_argument("transient oracle limited to n <= 5");
  }
  auto to_structured = [](const UnstructuredDistribution& d) {
    StructuredDistribution out;
    out.truncation_bound = d.truncation_bound;
    for (std::size_t i = 0; i < d.support.size(); ++i) {
      out.support.push_back(scattered(d.support[i]));
      out.probabilities.push_back(d.probabilities[i]);
    }
    return out;
  };
  switch (model.kind) {
    case ProcessKind::kFast:
      return uniformized_transient(fast_generator(model.params, start), start, t);
    case ProcessKind::kSlow: {
      if (!is_scattered(start)) {
        throw std::invalid_argument("the slow-process oracle starts from a scattered state");
      }
      return uniformized_transient(slow_generator(model.params, start.n()), start, t);
    }
    case ProcessKind::kLambdaReference:
      return to_structured(
          uniformized_transient(lambda_generator(model.lambda, start.n()), unstructured(start), t));
    case ProcessKind::kXiReference:
      return to_structured(
          uniformized_transient(xi_generator(model.xi, start.n()), unstructured(start), t));
    case ProcessKind::kFiniteD:
      break;
  }
  throw std::invalid_argument("no exact transient oracle for the finite-D process");
}

}  // namespace demecoal
