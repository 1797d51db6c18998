#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "demecoal/measures.hpp"
#include "demecoal/partition.hpp"

namespace demecoal {

/// Parameters of the metapopulation model with mass extinctions.
struct ModelParams {
  int deme_size = 1;           // N
  int source_demes = 1;        // K
  double migration_rate = 0;   // m1
  double extinction_rate = 0;  // e
  UnitIntervalMeasure reproduction_law = UnitIntervalMeasure::dirac(1.0);  // Lambda^d
  UnitIntervalMeasure extinction_law = UnitIntervalMeasure::dirac(1.0);    // Lambda^g
  /// Multiplies every within-deme merger rate. 1 matches the sampling
  /// recursion and the Kingman-part formula; N gives the per-individual
  /// reproduction convention.
  double deme_rate_scale = 1.0;

  /// Throws std::invalid_argument listing every violated constraint.
  void validate() const;
};

ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelParams& p);

/// One group of lineages gathered into a common deme, together with the
/// sizes of the sub-groups that share a parent and merge on arrival.
struct GatheredGroup {
  int size = 0;
  std::vector<int> merge_pattern;  // sorted descending, sums to size

  int parents() const { return static_cast<int>(merge_pattern.size()); }
  auto operator<=>(const GatheredGroup&) const = default;
  bool operator==(const GatheredGroup&) const = default;
};

/// Type of a geographical collision. Only groups of two or more lineages are
/// stored; the remaining lineages stay alone in their demes.
struct CollisionType {
  std::vector<GatheredGroup> groups;  // canonical: sorted descending

  /// Lineages gathered into non-singleton groups.
  int gathered() const;
  int group_count() const { return static_cast<int>(groups.size()); }
  /// True for one pair of lineages, the only shape migration can produce.
  bool is_pair() const;

  auto operator<=>(const CollisionType&) const = default;
  bool operator==(const CollisionType&) const = default;
};

CollisionType make_collision_type(std::vector<GatheredGroup> groups);
/// "(m;k1,..,kr,1,..,1;{..},..,{1},..)" with m the number of lineages present.
std::string to_string(const CollisionType& t, int lineages);

/// Concrete realization of a collision on a scattered partition: each group is
/// a list of merge classes, each class a list of block indices (positions in
/// the canonical block order of the scattered partition).
struct CollisionAssignment {
  std::vector<std::vector<std::vector<int>>> groups;

  auto operator<=>(const CollisionAssignment&) const = default;
  bool operator==(const CollisionAssignment&) const = default;
};

struct CollisionEvent {
  CollisionType type;
  std::optional<CollisionAssignment> assignment;
  /// A(k; k1..kr) * prod A(ki; Li): concrete collisions of this type among k
  /// fixed lineages.
  std::uint64_t multiplicity = 0;

  auto operator<=>(const CollisionEvent&) const = default;
  bool operator==(const CollisionEvent&) const = default;
};

CollisionType type_of(const CollisionAssignment& a);
/// Outcome of applying the assignment to a scattered partition.
StructuredPartition apply_collision(const StructuredPartition& scattered_state,
                                    const CollisionAssignment& a);

template <typename Target>
struct RateRow {
  struct Entry {
    Target target;
    double rate = 0.0;
  };
  std::vector<Entry> entries;

  double total() const {
    double t = 0.0;
    for (const auto& e : entries) t += e.rate;
    return t;
  }
  bool empty() const { return entries.empty(); }
};

// Reference coalescents ------------------------------------------------------

/// Sizes (descending) of the groups of blocks of `from` merged to form `to`,
/// counting only groups of two or more. std::nullopt if `to` is not a
/// coarsening of `from`.
std::optional<std::vector<int>> merger_groups(const UnstructuredPartition& from,
                                              const UnstructuredPartition& to);

double kingman_rate(const UnstructuredPartition& from, const UnstructuredPartition& to);

/// Rate of one particular k-merger among b blocks of a Lambda-coalescent.
double lambda_rate(const UnitIntervalMeasure& lambda, int b, int k);
/// Total rate at which b blocks experience some merger.
double lambda_total_rate(const UnitIntervalMeasure& lambda, int b);
/// Generator entry between two partitions (negative total on the diagonal).
double lambda_transition_rate(const UnitIntervalMeasure& lambda,
                              const UnstructuredPartition& from,
                              const UnstructuredPartition& to);

/// Rate of one particular simultaneous merger of groups of the given sizes
/// (each at least 2) among b blocks of a Xi-coalescent.
double xi_rate(const XiMeasure& xi, int b, const std::vector<int>& group_sizes);
double xi_transition_rate(const XiMeasure& xi, const UnstructuredPartition& from,
                          const UnstructuredPartition& to);

// Within-deme block-counting rates ----------------------------------------------

struct GRates {
  int n = 0;
  /// by_target[k] = g_{n,k}, the rate of going from n to k lineages, k in [1, n-1].
  std::vector<double> by_target;
  double total_from_sum = 0.0;
  double total_closed_form = 0.0;
};

GRates g_rates(const UnitIntervalMeasure& reproduction_law, int n, double scale = 1.0);

// Fast (within-deme) dynamics ---------------------------------------------------

/// Every within-deme merger and every move of a block out of a shared deme
/// into an empty one, on the fast time scale. Duplicate targets are merged,
/// entries come in canonical target order, and scattered states have an
/// empty row.
RateRow<StructuredPartition> fast_rates(const ModelParams& params,
                                        const StructuredPartition& state);

// Slow (collecting) dynamics -----------------------------------------------------

/// A(k; k1, .., kr): number of ways to split k labeled lineages into unordered
/// groups of the given sizes.
std::uint64_t group_count(const std::vector<int>& sizes);
std::uint64_t multiplicity(const CollisionType& t);

/// All collision types gathering at most m lineages into at most K groups of
/// two or more, with multiplicities, in canonical order.
std::vector<CollisionEvent> enumerate_collisions(int lineages, int max_groups);

/// Rate of one concrete extinction-driven collision of the given type when
/// `lineages` scattered lineages are present (limit of the finite-D rate).
double geo_collision_rate(const ModelParams& params, int lineages, const CollisionType& type);
/// Migration part: 2 m1 / N for a pair that merges, 2 m1 (N-1)/N otherwise,
/// zero for every other type.
double simple_collision_rate(const ModelParams& params, const CollisionType& type);
/// Total rate of one concrete collision (extinction plus migration).
double collision_rate(const ModelParams& params, int lineages, const CollisionType& type);

/// All concrete collisions out of a scattered state. Throws if the state is
/// not scattered.
RateRow<CollisionEvent> slow_rates(const ModelParams& params, const StructuredPartition& state);

// Structural checks ---------------------------------------------------------------

/// The compatibility relation between occupancy profiles of the fast process.
bool profile_precedes(const OccupancyProfile& from, const OccupancyProfile& to);

struct FastTableEntry {
  OccupancyProfile from;
  OccupancyProfile to;
  double rate = 0.0;
};

struct FastTableDiagnostics {
  std::vector<std::string> incompatible;      // positive rate without compatibility
  std::vector<std::string> absorbing_shared;  // profile with a shared deme but no exit
  bool ok() const { return incompatible.empty() && absorbing_shared.empty(); }
};

/// Checks a table of profile-to-profile rates. When max_blocks > 0 every
/// profile with at most that many blocks and at least one shared deme must
/// have a positive exit rate.
FastTableDiagnostics validate_fast_table(const std::vector<FastTableEntry>& table,
                                         int max_blocks = 0);

std::string to_string(const OccupancyProfile& p);

}  // namespace demecoal
