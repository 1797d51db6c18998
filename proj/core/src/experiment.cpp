#include "demecoal/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "demecoal/combinatorics.hpp"

#ifndef DEMECOAL_VERSION_STRING
#define DEMECOAL_VERSION_STRING "unknown"
#endif

namespace demecoal {

void ExperimentConfig::validate() const {
  model.params.validate();
  if (n < 1 || n > kMaxSampleSize) throw std::invalid_argument("n must be in [1, 64]");
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (times.empty()) throw std::invalid_argument("the time grid is empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i])) {
      throw std::invalid_argument("grid times must be finite and >= 0");
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw std::invalid_argument("the time grid must be strictly increasing");
    }
  }
  if (model.kind == ProcessKind::kFiniteD && finite_d.demes < 2) {
    throw std::invalid_argument("finite-D runs need demes >= 2");
  }
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("process")) c.model.kind = parse_process_kind(j.at("process").get<std::string>());
  if (j.contains("model")) c.model.params = params_from_json(j.at("model"));
  if (j.contains("lambda")) c.model.lambda = measure_from_json(j.at("lambda"));
  if (j.contains("xi")) c.model.xi = xi_from_json(j.at("xi"));
  c.finite_d.demes = j.value("demes", c.finite_d.demes);
  c.finite_d.time_rescale = j.value("time_rescale", c.finite_d.time_rescale);
  c.n = j.value("n", c.n);
  c.initial = j.value("initial", c.initial);
  c.replicates = j.value("replicates", c.replicates);
  if (j.contains("times")) c.times = j.at("times").get<std::vector<double>>();
  c.seed = j.value("seed", c.seed);
  c.output = j.value("output", c.output);
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"process", to_string(c.model.kind)},
          {"model", to_json(c.model.params)},
          {"lambda", to_json(c.model.lambda)},
          {"xi", to_json(c.model.xi)},
          {"demes", c.finite_d.demes},
          {"time_rescale", c.finite_d.time_rescale},
          {"n", c.n},
          {"initial", c.initial},
          {"replicates", c.replicates},
          {"times", c.times},
          {"seed", c.seed},
          {"output", c.output}};
}

StructuredPartition initial_state(const ExperimentConfig& c) {
  if (c.initial == "scattered") return StructuredPartition::scattered_singletons(c.n);
  if (c.initial == "single-deme") return StructuredPartition::single_deme_singletons(c.n);
  auto p = parse_structured(c.initial);
  if (p.n() != c.n) {
    throw std::invalid_argument("initial partition '" + c.initial + "' does not cover [" +
                                std::to_string(c.n) + "]");
  }
  return p;
}

Simulator::Simulator(const ExperimentConfig& config, int max_blocks) : config_(config) {
  config_.model.params.validate();
  if (config_.model.kind == ProcessKind::kSlow) {
    limit_ = std::make_shared<const LimitProcess>(config_.model.params,
                                                  std::max({max_blocks, config_.n, 1}));
  }
}

PathSample Simulator::run(const StructuredPartition& start, const StopRule& stop, Rng& rng) const {
  auto require_singletons = [&] {
    if (start != StructuredPartition::scattered_singletons(start.n())) {
      throw std::invalid_argument("reference coalescents start from scattered singletons");
    }
  };
  switch (config_.model.kind) {
    case ProcessKind::kFast:
      return simulate_fast_process(start, config_.model.params, rng);
    case ProcessKind::kSlow:
      return limit_->simulate(start, stop, rng);
    case ProcessKind::kFiniteD:
      return simulate_finite_d(start, config_.model.params, config_.finite_d, stop, rng);
    case ProcessKind::kLambdaReference:
      require_singletons();
      return simulate_lambda_coalescent(config_.model.lambda, start.n(), rng, stop);
    case ProcessKind::kXiReference:
      require_singletons();
      return simulate_xi_coalescent(config_.model.xi, start.n(), rng, stop);
  }
  throw std::logic_error("unknown process kind");
}

// Distributions ------------------------------------------------------------------------

void Empirical::add(const std::string& key, long count) {
  counts[key] += count;
  total += count;
}

double Empirical::frequency(const std::string& key) const {
  const auto it = counts.find(key);
  return it == counts.end() || total == 0 ? 0.0
                                          : static_cast<double>(it->second) / static_cast<double>(total);
}

ExactLaw exact_unstructured_law(const StructuredDistribution& d) {
  ExactLaw law;
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    law[to_string(unstructured(d.support[i]))] += d.probabilities[i];
  }
  return law;
}

ExactLaw exact_structured_law(const StructuredDistribution& d) {
  ExactLaw law;
  for (std::size_t i = 0; i < d.support.size(); ++i) law[to_string(d.support[i])] += d.probabilities[i];
  return law;
}

double total_variation(const ExactLaw& p, const ExactLaw& q) {
  double sum = 0.0;
  for (const auto& [k, v] : p) {
    const auto it = q.find(k);
    sum += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q) {
    if (!p.contains(k)) sum += std::abs(v);
  }
  return 0.5 * sum;
}

ExactLaw frequencies(const Empirical& e) {
  ExactLaw law;
  for (const auto& [k, c] : e.counts) law[k] = static_cast<double>(c) / static_cast<double>(e.total);
  return law;
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::kPaper: return "PAPER";
    case Provenance::kDerived: return "DERIVED";
    case Provenance::kTrivial: return "TRIVIAL";
  }
  return "?";
}

ComparisonReport& ComparisonReport::decide() {
  pass = std::abs(estimate - reference) <= tolerance + 3.0 * standard_error;
  return *this;
}

nlohmann::json to_json(const ComparisonReport& r) {
  return {{"statistic", r.statistic}, {"label", r.label},
          {"estimate", r.estimate},   {"se", r.standard_error},
          {"reference", r.reference}, {"provenance", to_string(r.provenance)},
          {"tolerance", r.tolerance}, {"pass", r.pass}};
}

namespace {

/// Multinomial draw of `size` items from `law`, by conditional binomials.
ExactLaw multinomial_frequencies(const ExactLaw& law, long size, Rng& rng) {
  ExactLaw out;
  long left = size;
  double mass_left = 1.0;
  for (const auto& [k, p] : law) {
    if (left == 0) break;
    const double q = mass_left > 0.0 ? std::clamp(p / mass_left, 0.0, 1.0) : 1.0;
    std::binomial_distribution<long> draw(left, q);
    const long c = draw(rng.engine());
    if (c > 0) out[k] = static_cast<double>(c) / static_cast<double>(size);
    left -= c;
    mass_left -= p;
  }
  return out;
}

}  // namespace

ComparisonReport tv_distance(const Empirical& a, const Empirical& b, std::uint64_t seed,
                             int resamples) {
  if (a.total == 0 || b.total == 0) throw std::invalid_argument("TV needs non-empty samples");
  ComparisonReport r;
  r.statistic = "total-variation";
  r.estimate = total_variation(frequencies(a), frequencies(b));
  Empirical pooled = a;
  for (const auto& [k, c] : b.counts) pooled.add(k, c);
  const auto law = frequencies(pooled);
  Rng rng(seed);
  double sum_sq = 0.0;
  for (int i = 0; i < resamples; ++i) {
    const double tv = total_variation(multinomial_frequencies(law, a.total, rng),
                                      multinomial_frequencies(law, b.total, rng));
    sum_sq += tv * tv;
  }
  r.standard_error = resamples > 0 ? std::sqrt(sum_sq / resamples) : 0.0;
  r.reference = 0.0;
  r.provenance = Provenance::kDerived;
  return r.decide();
}

ComparisonReport tv_distance(const Empirical& a, const ExactLaw& exact, std::uint64_t seed,
                             int resamples) {
  if (a.total == 0) throw std::invalid_argument("TV needs a non-empty sample");
  ComparisonReport r;
  r.statistic = "total-variation";
  const auto freq = frequencies(a);
  r.estimate = total_variation(freq, exact);
  Rng rng(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < resamples; ++i) {
    const double tv = total_variation(multinomial_frequencies(freq, a.total, rng), exact);
    sum += tv;
    sum_sq += tv * tv;
  }
  if (resamples > 1) {
    const double mean = sum / resamples;
    r.standard_error = std::sqrt(std::max(0.0, (sum_sq - resamples * mean * mean) / (resamples - 1)));
  }
  r.reference = 0.0;
  r.provenance = Provenance::kDerived;
  return r.decide();
}

GoodnessOfFit chi_square_gof(const Empirical& observed, const ExactLaw& expected,
                             double min_expected) {
  GoodnessOfFit g;
  const double total = static_cast<double>(observed.total);
  std::set<std::string> keys;
  for (const auto& [k, p] : expected) keys.insert(k);
  for (const auto& [k, c] : observed.counts) keys.insert(k);
  double pooled_obs = 0.0;
  double pooled_exp = 0.0;
  int cells = 0;
  for (const auto& k : keys) {
    const auto it = expected.find(k);
    const double e = total * (it == expected.end() ? 0.0 : it->second);
    const auto oc = observed.counts.find(k);
    const double o = oc == observed.counts.end() ? 0.0 : static_cast<double>(oc->second);
    if (e < min_expected) {
      pooled_obs += o;
      pooled_exp += e;
      continue;
    }
    g.statistic += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    g.statistic += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  } else if (pooled_obs > 0.0) {
    g.statistic = std::numeric_limits<double>::infinity();
  }
  g.degrees_of_freedom = std::max(0, cells - 1);
  const double df = g.degrees_of_freedom;
  g.threshold = df + 3.0 * std::sqrt(2.0 * df);
  g.pass = g.degrees_of_freedom == 0 ? g.statistic < 1e-9 : g.statistic <= g.threshold;
  return g;
}

// Merger rates -------------------------------------------------------------------------------

std::optional<std::string> merger_label(const Jump& jump) {
  const auto groups = merger_groups(jump.before, jump.after);
  if (!groups || groups->empty()) return std::nullopt;
  std::string label;
  for (std::size_t i = 0; i < groups->size(); ++i) {
    if (i) label += '+';
    label += std::to_string((*groups)[i]);
  }
  return label;
}

RateAccumulator::RateAccumulator(JumpClassifier classify) : classify_(std::move(classify)) {}

void RateAccumulator::add(const PathSample& path) {
  double last = 0.0;
  int blocks = static_cast<int>(unstructured(path.initial).blocks.size());
  for (const auto& jump : unstructured_jumps(path)) {
    if (blocks >= 2) exposure_[blocks] += jump.time - last;
    if (auto label = classify_(jump)) ++events_[{blocks, *label}];
    last = jump.time;
    blocks = static_cast<int>(jump.after.blocks.size());
  }
  if (blocks >= 2) exposure_[blocks] += path.terminal_time - last;
}

void RateAccumulator::merge(const RateAccumulator& other) {
  for (const auto& [m, e] : other.exposure_) exposure_[m] += e;
  for (const auto& [key, c] : other.events_) events_[key] += c;
}

double RateAccumulator::exposure(int blocks) const {
  const auto it = exposure_.find(blocks);
  return it == exposure_.end() ? 0.0 : it->second;
}

long RateAccumulator::events(int blocks, const std::string& label) const {
  const auto it = events_.find({blocks, label});
  return it == events_.end() ? 0 : it->second;
}

long RateAccumulator::total_events() const {
  long total = 0;
  for (const auto& [key, c] : events_) total += c;
  return total;
}

std::vector<RateEstimate> RateAccumulator::estimates() const {
  std::vector<RateEstimate> out;
  for (const auto& [key, count] : events_) {
    RateEstimate r;
    r.blocks = key.first;
    r.label = key.second;
    r.events = count;
    r.exposure = exposure(key.first);
    r.defined = r.exposure > 0.0;
    if (r.defined) {
      r.rate = static_cast<double>(count) / r.exposure;
      r.standard_error = std::sqrt(static_cast<double>(count)) / r.exposure;
      r.lower = std::max(0.0, r.rate - 1.96 * r.standard_error);
      r.upper = r.rate + 1.96 * r.standard_error;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RateEstimate> merger_rate_mle(const std::vector<PathSample>& paths,
                                          const JumpClassifier& classify) {
  RateAccumulator acc(classify);
  for (const auto& p : paths) acc.add(p);
  return acc.estimates();
}

// Experiments ----------------------------------------------------------------------------------

std::vector<Empirical> simulate_histograms(const ExperimentConfig& config, int jobs) {
  config.validate();
  const auto start = initial_state(config);
  const Simulator sim(config, start.block_count());
  StopRule stop;
  stop.horizon = config.times.back() > 0.0 ? config.times.back() : 1e-300;
  const auto states = parallel_replicates(config.replicates, config.seed, jobs, [&](long, Rng& rng) {
    const auto path = sim.run(start, stop, rng);
    std::vector<std::string> at;
    at.reserve(config.times.size());
    for (double t : config.times) at.push_back(to_string(path.state_at(t)));
    return at;
  });
  std::vector<Empirical> hist(config.times.size());
  for (const auto& row : states) {
    for (std::size_t i = 0; i < row.size(); ++i) hist[i].add(row[i]);
  }
  return hist;
}

namespace {

std::string number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

std::string histogram_csv(const ExperimentConfig& config, const std::vector<Empirical>& hist) {
  std::string out = "time,partition,count,frequency,se\n";
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double total = static_cast<double>(hist[i].total);
    for (const auto& [key, count] : hist[i].counts) {
      const double f = static_cast<double>(count) / total;
      out += number(config.times[i]) + "," + key + "," + std::to_string(count) + "," + number(f) +
             "," + number(std::sqrt(f * (1.0 - f) / total)) + "\n";
    }
  }
  return out;
}

std::string run_experiment(const ExperimentConfig& config, int jobs) {
  const auto started = std::chrono::steady_clock::now();
  const auto hist = simulate_histograms(config, jobs);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  namespace fs = std::filesystem;
  const fs::path dir(config.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  const auto csv_path = dir / "histogram.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  csv << histogram_csv(config, hist);

  nlohmann::json meta = {{"config", to_json(config)},
                         {"seed", config.seed},
                         {"replicates", config.replicates},
                         {"jobs", jobs},
                         {"version", build_version()},
                         {"wall_seconds", wall}};
  std::ofstream side(dir / "metadata.json");
  if (!side) throw std::runtime_error("cannot write metadata under " + dir.string());
  side << meta.dump(2) << "\n";
  return csv_path.string();
}

std::vector<KSweepRow> k_sweep(const ExperimentConfig& base, const std::vector<int>& source_counts,
                               int jobs) {
  std::vector<KSweepRow> rows;
  for (int K : source_counts) {
    ExperimentConfig c = base;
    c.model.kind = ProcessKind::kSlow;
    c.model.params.source_demes = K;
    c.validate();
    const Simulator sim(c, c.n);
    const auto start = StructuredPartition::scattered_singletons(c.n);
    const auto parts = parallel_replicates(
        c.replicates, replicate_seed(c.seed, static_cast<std::uint64_t>(K)), jobs, [&](long, Rng& rng) {
          RateAccumulator acc;
          acc.add(sim.run(start, StopRule{}, rng));
          return acc;
        });
    RateAccumulator acc;
    for (const auto& p : parts) acc.merge(p);

    KSweepRow row;
    row.K = K;
    long binary = 0;
    double pair_exposure = 0.0;
    for (int m = 2; m <= c.n; ++m) {
      binary += acc.events(m, "2");
      pair_exposure += acc.exposure(m) * static_cast<double>(combinatorics::binomial(m, 2));
    }
    row.events = acc.total_events();
    if (pair_exposure > 0.0) {
      row.pair_rate_times_k = K * static_cast<double>(binary) / pair_exposure;
      row.pair_rate_se = K * std::sqrt(static_cast<double>(binary)) / pair_exposure;
    }
    if (row.events > 0) {
      const double total = static_cast<double>(row.events);
      row.multiple_frequency = static_cast<double>(row.events - binary) / total;
      row.multiple_se = std::sqrt(row.multiple_frequency * (1.0 - row.multiple_frequency) / total);
    }
    const auto gen = slow_generator(c.model.params, 2);
    row.exact_pair_rate_times_k = K * gen.exit_rate(gen.index_of(StructuredPartition::scattered_singletons(2)));
    rows.push_back(row);
  }
  return rows;
}

std::vector<ConvergenceRow> converge_d(const ExperimentConfig& base, const std::vector<long>& demes,
                                       int jobs) {
  std::vector<ConvergenceRow> rows;
  const auto start = initial_state(base);
  const double t = base.times.front();
  for (long D : demes) {
    ExperimentConfig c = base;
    c.model.kind = ProcessKind::kFiniteD;
    c.finite_d.demes = D;
    c.validate();
    const double t_limit = c.finite_d.time_rescale ? t : t / static_cast<double>(D);
    ProcessModel limit{ProcessKind::kSlow, c.model.params, c.model.lambda, c.model.xi};
    const auto exact = exact_unstructured_law(transient_distribution_exact(limit, start, t_limit));
    const Simulator sim(c);
    StopRule stop;
    stop.horizon = t;
    const auto root = replicate_seed(c.seed, static_cast<std::uint64_t>(D));
    const auto states = parallel_replicates(c.replicates, root, jobs, [&](long, Rng& rng) {
      return to_string(unstructured(sim.run(start, stop, rng).state_at(t)));
    });
    Empirical e;
    for (const auto& s : states) e.add(s);
    ConvergenceRow row;
    row.demes = D;
    row.tv = tv_distance(e, exact, mix64(root));
    row.tv.label = "D=" + std::to_string(D);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string build_version() { return DEMECOAL_VERSION_STRING; }

}  // namespace demecoal
