#include "demecoal/consistency.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace demecoal {

namespace {

void check_order(int k_max) {
  if (k_max < 1 || k_max > kMaxConsistencyOrder) {
    throw std::invalid_argument("consistency checks need 1 <= k_max <= 6");
  }
}

void record(ConsistencyResult& result, double lhs, double rhs, const std::string& where) {
  ++result.checked;
  const double v = std::abs(lhs - rhs);
  if (v > result.max_violation || (std::isnan(v) && !std::isnan(result.max_violation))) {
    result.max_violation = v;
    result.worst_case = where;
  }
}

}  // namespace

ConsistencyResult check_lambda_g_consistency(const CollisionRateFn& rate, int k_max) {
  check_order(k_max);
  ConsistencyResult result;
  for (int m = 2; m <= k_max; ++m) {
    // Every type, regardless of the source-deme limit: rates beyond it must vanish on both sides.
    for (const auto& event : enumerate_collisions(m, m)) {
      const CollisionType& t = event.type;
      double rhs = rate(m + 1, t);  // the new lineage stays alone
      for (std::size_t u = 0; u < t.groups.size(); ++u) {
        const auto& g = t.groups[u];
        for (std::size_t j = 0; j <= g.merge_pattern.size(); ++j) {
          auto groups = t.groups;
          groups[u].size += 1;
          if (j < g.merge_pattern.size()) {
            groups[u].merge_pattern[j] += 1;
          } else {
            groups[u].merge_pattern.push_back(1);
          }
          rhs += rate(m + 1, make_collision_type(std::move(groups)));
        }
      }
      // The new lineage joins one of the lineages left alone by the event.
      const int alone = m - t.gathered();
      if (alone > 0) {
        for (const auto& pattern : {std::vector<int>{2}, std::vector<int>{1, 1}}) {
          auto groups = t.groups;
          groups.push_back({2, pattern});
          rhs += alone * rate(m + 1, make_collision_type(std::move(groups)));
        }
      }
      record(result, rate(m, t), rhs, to_string(t, m));
    }
  }
  return result;
}

ConsistencyResult check_lambda_g_consistency(const ModelParams& params, int k_max) {
  return check_lambda_g_consistency(
      [&params](int m, const CollisionType& t) { return collision_rate(params, m, t); }, k_max);
}

std::vector<StructuredPartition> extensions(const StructuredPartition& p) {
  const int n = p.n();
  if (n + 1 > kMaxSampleSize) throw std::invalid_argument("cannot extend beyond 64 labels");
  const Block added = singleton(n + 1);
  std::vector<StructuredPartition> out;
  const auto& demes = p.demes();
  for (std::size_t d = 0; d < demes.size(); ++d) {
    for (std::size_t b = 0; b < demes[d].size(); ++b) {
      auto copy = demes;
      copy[d][b] |= added;
      out.push_back(canonical_unchecked(n + 1, std::move(copy)));
    }
    auto copy = demes;
    copy[d].push_back(added);
    out.push_back(canonical_unchecked(n + 1, std::move(copy)));
  }
  auto copy = demes;
  copy.push_back({added});
  out.push_back(canonical_unchecked(n + 1, std::move(copy)));
  return out;
}

ConsistencyResult check_fast_consistency(const FastRowFn& rows, int k_max) {
  check_order(k_max);
  ConsistencyResult result;
  for (int k = 1; k <= k_max; ++k) {
    for (const auto& zeta : enumerate_structured(k)) {
      std::map<StructuredPartition, double> direct;
      for (const auto& e : rows(zeta).entries) direct[e.target] += e.rate;
      for (const auto& ext : extensions(zeta)) {
        std::map<StructuredPartition, double> projected;
        for (const auto& e : rows(ext).entries) {
          auto target = restrict_to(e.target, k);
          if (target != zeta) projected[target] += e.rate;
        }
        for (const auto& [target, rate] : direct) {
          const auto it = projected.find(target);
          record(result, rate, it == projected.end() ? 0.0 : it->second,
                 to_string(zeta) + " via " + to_string(ext) + " -> " + to_string(target));
        }
        for (const auto& [target, rate] : projected) {
          if (!direct.contains(target)) {
            record(result, 0.0, rate,
                   to_string(zeta) + " via " + to_string(ext) + " -> " + to_string(target));
          }
        }
      }
    }
  }
  return result;
}

ConsistencyResult check_fast_consistency(const ModelParams& params, int k_max) {
  return check_fast_consistency(
      [&params](const StructuredPartition& s) { return fast_rates(params, s); }, k_max);
}

}  // namespace demecoal
