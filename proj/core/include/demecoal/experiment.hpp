#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "demecoal/exact.hpp"
#include "demecoal/simulate.hpp"

namespace demecoal {

struct ExperimentConfig {
  ProcessModel model;
  FiniteDConfig finite_d;
  int n = 3;
  /// "scattered", "single-deme", or a partition in text form.
  std::string initial = "scattered";
  long replicates = 1000;
  std::vector<double> times{1.0};
  std::uint64_t seed = 1;
  std::string output = "out";

  /// Throws std::invalid_argument on the first violated constraint.
  void validate() const;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

StructuredPartition initial_state(const ExperimentConfig& c);

/// Runs fn(index, rng) for every replicate on `jobs` threads. Replicate i
/// always draws from Rng(replicate_seed(seed, i)) and lands in slot i, so
/// the result does not depend on the number of threads.
template <typename Fn>
auto parallel_replicates(long count, std::uint64_t seed, int jobs, Fn fn)
    -> std::vector<decltype(fn(0L, std::declval<Rng&>()))> {
  using R = decltype(fn(0L, std::declval<Rng&>()));
  std::vector<std::optional<R>> slots(static_cast<std::size_t>(std::max(0L, count)));
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  auto work = [&] {
    for (long i = next++; i < count && !failed; i = next++) {
      try {
        Rng rng(replicate_seed(seed, static_cast<std::uint64_t>(i)));
        slots[static_cast<std::size_t>(i)].emplace(fn(i, rng));
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, jobs);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Simulates the configured process from any start. Precomputed tables are
/// shared read-only between threads.
class Simulator {
 public:
  explicit Simulator(const ExperimentConfig& config, int max_blocks = 0);
  PathSample run(const StructuredPartition& start, const StopRule& stop, Rng& rng) const;

 private:
  ExperimentConfig config_;
  std::shared_ptr<const LimitProcess> limit_;
};

// Distributions and comparisons ---------------------------------------------------------

/// Empirical law of a categorical outcome, keyed by its text encoding.
struct Empirical {
  std::map<std::string, long> counts;
  long total = 0;

  void add(const std::string& key, long count = 1);
  double frequency(const std::string& key) const;
};

using ExactLaw = std::map<std::string, double>;

/// Unstructured marginal of an exact distribution, keyed by text.
ExactLaw exact_unstructured_law(const StructuredDistribution& d);
ExactLaw exact_structured_law(const StructuredDistribution& d);

double total_variation(const ExactLaw& p, const ExactLaw& q);
ExactLaw frequencies(const Empirical& e);

enum class Provenance { kPaper, kDerived, kTrivial };
const char* to_string(Provenance p);

struct ComparisonReport {
  std::string statistic;  // "total-variation", "rate-mle", "mean-with-ci", ...
  std::string label;
  double estimate = 0.0;
  double standard_error = 0.0;
  double reference = 0.0;
  Provenance provenance = Provenance::kDerived;
  double tolerance = 0.0;
  bool pass = false;

  /// pass = |estimate - reference| <= tolerance + 3 SE.
  ComparisonReport& decide();
};

nlohmann::json to_json(const ComparisonReport& r);

/// Two-sample TV. The standard error is the root mean square of the TV
/// between two bootstrap samples of the same sizes drawn from the pooled
/// law, i.e. the scale of the statistic when both samples share one law.
ComparisonReport tv_distance(const Empirical& a, const Empirical& b, std::uint64_t seed,
                             int resamples = 200);
/// One-sample TV against an exact law; standard error from multinomial
/// resampling of the empirical sample.
ComparisonReport tv_distance(const Empirical& a, const ExactLaw& exact, std::uint64_t seed,
                             int resamples = 200);

/// Pearson goodness of fit; cells with expected count below `min_expected`
/// are pooled. Passes when the statistic is within df + 3 sqrt(2 df).
struct GoodnessOfFit {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double threshold = 0.0;
  bool pass = false;
};
GoodnessOfFit chi_square_gof(const Empirical& observed, const ExactLaw& expected,
                             double min_expected = 5.0);

// Merger-rate estimation --------------------------------------------------------------------

/// Maps a jump to the label of its rate class, or nullopt to ignore it.
using JumpClassifier = std::function<std::optional<std::string>(const Jump&)>;

/// Sizes of the merged groups, e.g. "2", "3" or "2+2".
std::optional<std::string> merger_label(const Jump& jump);

struct RateEstimate {
  int blocks = 0;
  std::string label;
  long events = 0;
  double exposure = 0.0;  // total time spent with `blocks` blocks
  double rate = 0.0;
  double standard_error = 0.0;
  double lower = 0.0;  // Wald 95% interval
  double upper = 0.0;
  bool defined = false;  // false when exposure is zero
};

/// Exponential-rate MLE: events / exposure per block count and label.
class RateAccumulator {
 public:
  explicit RateAccumulator(JumpClassifier classify = merger_label);
  void add(const PathSample& path);
  void merge(const RateAccumulator& other);
  std::vector<RateEstimate> estimates() const;
  double exposure(int blocks) const;
  long events(int blocks, const std::string& label) const;
  long total_events() const;

 private:
  JumpClassifier classify_;
  std::map<int, double> exposure_;
  std::map<std::pair<int, std::string>, long> events_;
};

std::vector<RateEstimate> merger_rate_mle(const std::vector<PathSample>& paths,
                                          const JumpClassifier& classify = merger_label);

// Experiments --------------------------------------------------------------------------------

/// Structured state at each grid time, one Empirical per time.
std::vector<Empirical> simulate_histograms(const ExperimentConfig& config, int jobs);

/// Writes histogram.csv (time,partition,count,frequency,se) and metadata.json
/// under config.output. Returns the CSV path.
std::string run_experiment(const ExperimentConfig& config, int jobs);
std::string histogram_csv(const ExperimentConfig& config, const std::vector<Empirical>& hist);

struct KSweepRow {
  int K = 0;
  double pair_rate_times_k = 0.0;
  double pair_rate_se = 0.0;   // of the scaled rate
  double exact_pair_rate_times_k = 0.0;  // two-lineage rate, from the rate tables
  double multiple_frequency = 0.0;  // share of jumps that are not one binary merger
  double multiple_se = 0.0;
  long events = 0;
};
/// Limit-process genealogies (until the MRCA) from n scattered singletons
/// for each K. The base config supplies everything else.
std::vector<KSweepRow> k_sweep(const ExperimentConfig& base, const std::vector<int>& source_counts,
                               int jobs);

struct ConvergenceRow {
  long demes = 0;
  ComparisonReport tv;
};
/// TV between the finite-D unstructured marginal at base.times.front() and
/// the exact limit-process marginal, for each D.
std::vector<ConvergenceRow> converge_d(const ExperimentConfig& base, const std::vector<long>& demes,
                                       int jobs);

/// Version string of the source tree the binary was built from.
std::string build_version();

}  // namespace demecoal
