#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace demecoal {

// A block is a set of sample labels in [n], stored as a bitmask with label i at
// bit (i - 1). Sample sizes are therefore limited to 64.
using Block = std::uint64_t;

inline constexpr int kMaxSampleSize = 64;
// Exhaustive enumeration of structured partitions is refused above this size.
inline constexpr int kMaxEnumerationSize = 8;

int min_element(Block b);
int block_size(Block b);
Block singleton(int label);
std::vector<int> block_elements(Block b);

/// Partition of [n] into blocks, ordered by minimum element.
struct UnstructuredPartition {
  int n = 0;
  std::vector<Block> blocks;

  std::size_t size() const { return blocks.size(); }
  auto operator<=>(const UnstructuredPartition&) const = default;
  bool operator==(const UnstructuredPartition&) const = default;
};

/// Per-deme block counts, sorted descending.
struct OccupancyProfile {
  std::vector<int> counts;

  int total() const;
  auto operator<=>(const OccupancyProfile&) const = default;
  bool operator==(const OccupancyProfile&) const = default;
};

/// Unordered structured partition of [n]: blocks grouped into exchangeable
/// demes. Always held in canonical form: blocks within a deme ordered by
/// their minimum element, demes ordered by their smallest element, and no
/// empty demes.
class StructuredPartition {
 public:
  using Deme = std::vector<Block>;

  StructuredPartition() = default;

  /// Validates and canonicalizes. Throws std::invalid_argument on empty or
  /// overlapping blocks, labels outside [n], or when the blocks do not cover
  /// [n].
  static StructuredPartition from_demes(int n, std::vector<Deme> demes);
  /// Same as from_demes but with blocks given as label lists.
  static StructuredPartition from_labels(
      int n, const std::vector<std::vector<std::vector<int>>>& demes);

  static StructuredPartition scattered_singletons(int n);
  static StructuredPartition single_deme_singletons(int n);

  int n() const { return n_; }
  const std::vector<Deme>& demes() const { return demes_; }
  std::size_t deme_count() const { return demes_.size(); }
  /// Total number of blocks.
  int block_count() const;

  auto operator<=>(const StructuredPartition&) const = default;
  bool operator==(const StructuredPartition&) const = default;

 private:
  StructuredPartition(int n, std::vector<Deme> demes)
      : n_(n), demes_(std::move(demes)) {}

  friend StructuredPartition canonical_unchecked(int n,
                                                 std::vector<std::vector<Block>> demes);

  int n_ = 0;
  std::vector<Deme> demes_;
};

// Sorts blocks and demes without validating the contents. Empty demes are
// dropped. Internal fast path for transitions of already valid partitions.
StructuredPartition canonical_unchecked(int n, std::vector<std::vector<Block>> demes);

/// Canonicalizes a raw list of demes, each a list of blocks given as labels.
StructuredPartition canonicalize(int n,
                                 const std::vector<std::vector<std::vector<int>>>& raw);

OccupancyProfile occupancy_profile(const StructuredPartition& p);
/// True iff every deme holds exactly one block.
bool is_scattered(const StructuredPartition& p);

/// Merges the listed blocks of one deme into a single block.
StructuredPartition merge_blocks(const StructuredPartition& p, std::size_t deme,
                                 const std::vector<std::size_t>& block_indices);

/// Target deme for move_block; std::nullopt-like sentinel for a fresh deme.
inline constexpr std::size_t kFreshDeme = static_cast<std::size_t>(-1);

StructuredPartition move_block(const StructuredPartition& p, std::size_t source_deme,
                               std::size_t block_index, std::size_t target_deme);

UnstructuredPartition unstructured(const StructuredPartition& p);
/// Scattered structured partition with one block per deme.
StructuredPartition scattered(const UnstructuredPartition& u);
/// Drops labels above m and any blocks or demes left empty.
StructuredPartition restrict_to(const StructuredPartition& p, int m);
UnstructuredPartition restrict_to(const UnstructuredPartition& u, int m);

/// All structured partitions of [n], in canonical order. Refuses n above
/// kMaxEnumerationSize.
std::vector<StructuredPartition> enumerate_structured(int n);
/// All elements of the scattered subset, one per set partition of [n].
std::vector<StructuredPartition> enumerate_scattered(int n);
/// All set partitions of [n].
std::vector<UnstructuredPartition> enumerate_set_partitions(int n);

/// Calls visit(assignment, block_count) for every set partition of {0..m-1},
/// where assignment[i] is the (restricted growth) class index of element i.
void for_each_set_partition(int m,
                            const std::function<void(const std::vector<int>&, int)>& visit);

/// Text encoding: demes separated by '|', blocks by ';', labels by ','.
/// Example: "1;2|3,4|5". Parsing accepts any order; emission is canonical.
std::string to_string(const StructuredPartition& p);
std::string to_string(const UnstructuredPartition& u);
StructuredPartition parse_structured(std::string_view text);
/// Parses either the scattered form "1,2|3" or a single-deme list "1,2;3".
UnstructuredPartition parse_unstructured(std::string_view text);

/// Sorted block sizes, descending.
std::vector<int> block_size_profile(const UnstructuredPartition& u);

struct StructuredPartitionHash {
  std::size_t operator()(const StructuredPartition& p) const noexcept;
};

}  // namespace demecoal
