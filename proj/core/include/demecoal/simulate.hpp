#pragma once

#include <limits>
#include <string>
#include <vector>

#include "demecoal/measures.hpp"
#include "demecoal/partition.hpp"
#include "demecoal/rates.hpp"
#include "demecoal/rng.hpp"

namespace demecoal {

enum class EventKind {
  kFastMerge,
  kFastMove,
  kSimpleCollision,
  kExtinctionCollision,
  kInstantaneousScatter,
  kMerger,  // reference Lambda/Xi coalescents
};

const char* to_string(EventKind k);
EventKind parse_event_kind(const std::string& s);

struct PathEvent {
  double time = 0.0;
  EventKind kind = EventKind::kFastMerge;
  StructuredPartition state;  // state right after the event
  /// Set on collisions whose scattering phase restores the previous state.
  bool same_state = false;
};

/// Event skeleton of one simulated genealogy. Times are non-decreasing; the
/// sub-steps of an instantaneous scattering phase share the time stamp of the
/// collision that triggered it.
struct PathSample {
  StructuredPartition initial;
  std::vector<PathEvent> events;
  double terminal_time = 0.0;

  /// State holding at time t (events stamped exactly at t included).
  const StructuredPartition& state_at(double t) const;
  const StructuredPartition& final_state() const;
};

/// One observable jump of the unstructured partition: the collision or
/// merger at `time` together with its whole scattering phase.
struct Jump {
  double time = 0.0;
  EventKind kind = EventKind::kFastMerge;  // kind of the triggering event
  UnstructuredPartition before;
  UnstructuredPartition after;
};

/// Collapses each group of equally stamped records into one jump and drops
/// jumps that leave the unstructured partition unchanged.
std::vector<Jump> unstructured_jumps(const PathSample& path);

/// CSV serialization: header "time,kind,partition", then the initial state
/// at time 0 with kind "initial", then one line per event.
std::string to_csv(const PathSample& path);
PathSample path_from_csv(const std::string& text);

struct StopRule {
  double horizon = std::numeric_limits<double>::infinity();
  /// Stop as soon as a single block remains.
  bool until_mrca = true;
};

// Fast process ----------------------------------------------------------------------

/// Runs the within-deme dynamics until every deme holds one block.
/// `transitions`, when given, receives the number of jumps taken.
StructuredPartition run_fast_to_absorption(const StructuredPartition& start,
                                           const ModelParams& params, Rng& rng,
                                           int* transitions = nullptr);

/// Full path of the fast process, with exponential holding times, up to
/// absorption.
PathSample simulate_fast_process(const StructuredPartition& start, const ModelParams& params,
                                 Rng& rng);

// Limit process --------------------------------------------------------------------

/// Limit process on scattered states. Per block count it tabulates every
/// collision type with its total rate once, so one instance serves many
/// replicates and may be shared between threads.
class LimitProcess {
 public:
  LimitProcess(ModelParams params, int max_blocks);

  PathSample simulate(const StructuredPartition& start, const StopRule& stop, Rng& rng) const;

  /// Total collision rate (ghost events included) with m blocks.
  double total_rate(int m) const;

  const ModelParams& params() const { return params_; }

 private:
  struct TypeEntry {
    CollisionType type;
    double total = 0.0;        // multiplicity * C(m, k) * per-collision rate
    double simple_share = 0.0; // fraction of the rate due to migration
  };
  struct Table {
    std::vector<TypeEntry> entries;
    double total = 0.0;
  };

  CollisionAssignment draw_assignment(const CollisionType& type, int m, Rng& rng) const;

  ModelParams params_;
  std::vector<Table> tables_;  // indexed by block count
};

PathSample simulate_limit_process(const StructuredPartition& start, const ModelParams& params,
                                  const StopRule& stop, Rng& rng);

// Finite number of demes ------------------------------------------------------------

struct FiniteDConfig {
  long demes = 100;  // D
  /// When true, times are reported on the collecting time scale (natural
  /// time divided by D); otherwise in natural units.
  bool time_rescale = true;
};

/// Exact simulation of the structured genealogy with D demes. Horizon and
/// reported times use the units selected by `config.time_rescale`.
PathSample simulate_finite_d(const StructuredPartition& start, const ModelParams& params,
                             const FiniteDConfig& config, const StopRule& stop, Rng& rng);

// Reference coalescents --------------------------------------------------------------

PathSample simulate_lambda_coalescent(const UnitIntervalMeasure& lambda, int n, Rng& rng,
                                      const StopRule& stop = {});
PathSample simulate_xi_coalescent(const XiMeasure& xi, int n, Rng& rng,
                                  const StopRule& stop = {});

/// Xi-coalescent merger types at b blocks: sorted group sizes, the number of
/// concrete mergers of that type, and the rate of each.
struct XiMergerType {
  std::vector<int> group_sizes;
  std::uint64_t count = 0;
  double rate = 0.0;
};
std::vector<XiMergerType> xi_merger_types(const XiMeasure& xi, int b);

}  // namespace demecoal
