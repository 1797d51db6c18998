#pragma once

#include <functional>
#include <string>

#include "demecoal/rates.hpp"

namespace demecoal {

/// Rate of one concrete collision of the given type among `lineages`
/// scattered lineages.
using CollisionRateFn = std::function<double(int lineages, const CollisionType&)>;
using FastRowFn = std::function<RateRow<StructuredPartition>(const StructuredPartition&)>;

inline constexpr int kMaxConsistencyOrder = 6;

struct ConsistencyResult {
  double max_violation = 0.0;
  std::string worst_case;  // description of where the maximum was reached
  int checked = 0;         // number of identities evaluated
};

/// Checks that each collision rate at k lineages equals the sum of the rates
/// of all collisions at k+1 lineages that restrict to it, for every type with
/// 2 <= k <= k_max.
ConsistencyResult check_lambda_g_consistency(const CollisionRateFn& rate, int k_max);
ConsistencyResult check_lambda_g_consistency(const ModelParams& params, int k_max);

/// Checks that fast rows projected from [k+1] to [k] reproduce the rows on
/// [k], for every structured partition of [k] with 1 <= k <= k_max and every
/// way of placing label k+1.
ConsistencyResult check_fast_consistency(const FastRowFn& rows, int k_max);
ConsistencyResult check_fast_consistency(const ModelParams& params, int k_max);

/// Every structured partition of [k+1] that restricts to `p`.
std::vector<StructuredPartition> extensions(const StructuredPartition& p);

}  // namespace demecoal
