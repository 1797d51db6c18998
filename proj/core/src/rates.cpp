#include "demecoal/rates.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "demecoal/combinatorics.hpp"

namespace demecoal {

namespace cb = combinatorics;

void ModelParams::validate() const {
  std::vector<std::string> problems;
  if (deme_size < 1) problems.push_back("N must be >= 1");
  if (source_demes < 1) problems.push_back("K must be >= 1");
  if (!(migration_rate >= 0.0) || !std::isfinite(migration_rate)) problems.push_back("m1 must be >= 0");
  if (!(extinction_rate >= 0.0) || !std::isfinite(extinction_rate)) problems.push_back("e must be >= 0");
  if (!(deme_rate_scale >= 0.0) || !std::isfinite(deme_rate_scale)) {
    problems.push_back("deme_rate_scale must be >= 0");
  }
  for (const auto& m : demecoal::validate(reproduction_law, MeasureRole::kModelProbability).messages) {
    problems.push_back("lambda_d: " + m);
  }
  for (const auto& m : demecoal::validate(extinction_law, MeasureRole::kModelProbability).messages) {
    problems.push_back("lambda_g: " + m);
  }
  if (!problems.empty()) {
    std::string msg = "invalid model parameters:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw std::invalid_argument(msg);
  }
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  p.deme_size = j.value("N", p.deme_size);
  p.source_demes = j.value("K", p.source_demes);
  p.migration_rate = j.value("m1", p.migration_rate);
  p.extinction_rate = j.value("e", p.extinction_rate);
  if (j.contains("lambda_d")) p.reproduction_law = measure_from_json(j.at("lambda_d"));
  if (j.contains("lambda_g")) p.extinction_law = measure_from_json(j.at("lambda_g"));
  p.deme_rate_scale = j.value("deme_rate_scale", p.deme_rate_scale);
  p.validate();
  return p;
}

nlohmann::json to_json(const ModelParams& p) {
  return {{"N", p.deme_size},
          {"K", p.source_demes},
          {"m1", p.migration_rate},
          {"e", p.extinction_rate},
          {"lambda_d", to_json(p.reproduction_law)},
          {"lambda_g", to_json(p.extinction_law)},
          {"deme_rate_scale", p.deme_rate_scale}};
}

// Collision types ----------------------------------------------------------------

int CollisionType::gathered() const {
  int k = 0;
  for (const auto& g : groups) k += g.size;
  return k;
}

bool CollisionType::is_pair() const { return groups.size() == 1 && groups[0].size == 2; }

CollisionType make_collision_type(std::vector<GatheredGroup> groups) {
  for (auto& g : groups) {
    if (g.size < 2) throw std::invalid_argument("gathered groups must hold at least two lineages");
    std::sort(g.merge_pattern.begin(), g.merge_pattern.end(), std::greater<>());
    if (std::accumulate(g.merge_pattern.begin(), g.merge_pattern.end(), 0) != g.size ||
        g.merge_pattern.empty() || g.merge_pattern.back() < 1) {
      throw std::invalid_argument("merge pattern must be positive integers summing to the group size");
    }
  }
  std::sort(groups.begin(), groups.end(), std::greater<>());
  return CollisionType{std::move(groups)};
}

std::string to_string(const CollisionType& t, int lineages) {
  std::ostringstream os;
  os << '(' << lineages << ';';
  bool first = true;
  for (const auto& g : t.groups) {
    os << (first ? "" : ",") << g.size;
    first = false;
  }
  for (int i = t.gathered(); i < lineages; ++i) {
    os << (first ? "" : ",") << 1;
    first = false;
  }
  os << ';';
  first = true;
  for (const auto& g : t.groups) {
    os << (first ? "" : ",") << '{';
    first = false;
    for (std::size_t i = 0; i < g.merge_pattern.size(); ++i) {
      os << (i ? "," : "") << g.merge_pattern[i];
    }
    os << '}';
  }
  for (int i = t.gathered(); i < lineages; ++i) {
    os << (first ? "" : ",") << "{1}";
    first = false;
  }
  os << ')';
  return os.str();
}

CollisionType type_of(const CollisionAssignment& a) {
  std::vector<GatheredGroup> groups;
  for (const auto& g : a.groups) {
    GatheredGroup out;
    for (const auto& cls : g) {
      out.size += static_cast<int>(cls.size());
      out.merge_pattern.push_back(static_cast<int>(cls.size()));
    }
    groups.push_back(std::move(out));
  }
  return make_collision_type(std::move(groups));
}

StructuredPartition apply_collision(const StructuredPartition& state,
                                    const CollisionAssignment& a) {
  if (!is_scattered(state)) throw std::invalid_argument("collisions act on scattered states");
  const auto& demes = state.demes();
  const int m = static_cast<int>(demes.size());
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  std::vector<std::vector<Block>> out;
  for (const auto& group : a.groups) {
    std::vector<Block> deme;
    for (const auto& cls : group) {
      Block merged = 0;
      for (int idx : cls) {
        if (idx < 0 || idx >= m || used[static_cast<std::size_t>(idx)]) {
          throw std::invalid_argument("collision assignment uses an invalid or repeated block index");
        }
        used[static_cast<std::size_t>(idx)] = true;
        merged |= demes[static_cast<std::size_t>(idx)].front();
      }
      deme.push_back(merged);
    }
    out.push_back(std::move(deme));
  }
  for (int i = 0; i < m; ++i) {
    if (!used[static_cast<std::size_t>(i)]) out.push_back({demes[static_cast<std::size_t>(i)].front()});
  }
  return canonical_unchecked(state.n(), std::move(out));
}

// Reference coalescents ------------------------------------------------------

std::optional<std::vector<int>> merger_groups(const UnstructuredPartition& from,
                                              const UnstructuredPartition& to) {
  if (from.n != to.n) return std::nullopt;
  std::vector<int> sizes;
  for (Block target : to.blocks) {
    int parts = 0;
    Block covered = 0;
    for (Block b : from.blocks) {
      if ((b & target) == 0) continue;
      if ((b & ~target) != 0) return std::nullopt;
      covered |= b;
      ++parts;
    }
    if (covered != target) return std::nullopt;
    if (parts >= 2) sizes.push_back(parts);
  }
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  return sizes;
}

double kingman_rate(const UnstructuredPartition& from, const UnstructuredPartition& to) {
  if (from == to) {
    const double b = static_cast<double>(from.size());
    return -b * (b - 1.0) / 2.0;
  }
  const auto groups = merger_groups(from, to);
  return (groups && *groups == std::vector<int>{2}) ? 1.0 : 0.0;
}

double lambda_rate(const UnitIntervalMeasure& lambda, int b, int k) {
  if (k < 2) throw std::invalid_argument("a merger involves at least two blocks");
  if (k > b) throw std::invalid_argument("cannot merge more blocks than are present");
  return moment(lambda, k - 2, b - k);
}

double lambda_total_rate(const UnitIntervalMeasure& lambda, int b) {
  double total = 0.0;
  for (int k = 2; k <= b; ++k) total += static_cast<double>(cb::binomial(b, k)) * lambda_rate(lambda, b, k);
  return total;
}

double lambda_transition_rate(const UnitIntervalMeasure& lambda,
                              const UnstructuredPartition& from,
                              const UnstructuredPartition& to) {
  const int b = static_cast<int>(from.size());
  if (from == to) return -lambda_total_rate(lambda, b);
  const auto groups = merger_groups(from, to);
  if (!groups || groups->size() != 1) return 0.0;
  return lambda_rate(lambda, b, groups->front());
}

namespace {

// Sum over ordered tuples of distinct coordinates (i_1..i_r, i_{r+1}..i_{r+l})
// of x_{i_1}^{k_1} .. x_{i_r}^{k_r} x_{i_{r+1}} .. x_{i_{r+l}}.
double distinct_coordinate_sum(const std::vector<double>& x, const std::vector<int>& exponents,
                               std::size_t position, std::uint64_t used) {
  if (position == exponents.size()) return 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (used & (std::uint64_t{1} << i)) continue;
    total += std::pow(x[i], exponents[position]) *
             distinct_coordinate_sum(x, exponents, position + 1, used | (std::uint64_t{1} << i));
  }
  return total;
}

}  // namespace

double xi_rate(const XiMeasure& xi, int b, const std::vector<int>& group_sizes) {
  if (group_sizes.empty()) throw std::invalid_argument("xi_rate needs at least one group");
  int k = 0;
  for (int s : group_sizes) {
    if (s < 2) throw std::invalid_argument("merged groups hold at least two blocks");
    k += s;
  }
  if (k > b) throw std::invalid_argument("groups exceed the number of blocks");
  const int s = b - k;
  const int r = static_cast<int>(group_sizes.size());
  double total = 0.0;
  for (const auto& atom : xi.atoms) {
    const auto& x = atom.coordinates;
    if (x.size() > 63) throw std::invalid_argument("Xi atoms are limited to 63 nonzero coordinates");
    double squares = 0.0;
    double sum = 0.0;
    for (double c : x) {
      squares += c * c;
      sum += c;
    }
    if (!(squares > 0.0)) throw std::invalid_argument("Xi0 atom at zero");
    const double rest = std::max(0.0, 1.0 - sum);
    double inner = 0.0;
    for (int l = 0; l <= s && r + l <= static_cast<int>(x.size()); ++l) {
      std::vector<int> exponents = group_sizes;
      exponents.insert(exponents.end(), static_cast<std::size_t>(l), 1);
      double rest_power = 1.0;
      for (int i = 0; i < s - l; ++i) rest_power *= rest;
      inner += static_cast<double>(cb::binomial(s, l)) *
               distinct_coordinate_sum(x, exponents, 0, 0) * rest_power;
    }
    total += atom.weight * inner / squares;
  }
  if (r == 1 && group_sizes.front() == 2) total += xi.kingman_mass;
  return total;
}

double xi_transition_rate(const XiMeasure& xi, const UnstructuredPartition& from,
                          const UnstructuredPartition& to) {
  const int b = static_cast<int>(from.size());
  if (from == to) {
    double total = 0.0;
    for (int k = 2; k <= b; ++k) {
      for (const auto& sizes : cb::integer_partitions(k, 2)) {
        total += static_cast<double>(cb::binomial(b, k) * cb::unordered_split_count(sizes)) *
                 xi_rate(xi, b, sizes);
      }
    }
    return -total;
  }
  const auto groups = merger_groups(from, to);
  if (!groups || groups->empty()) return 0.0;
  return xi_rate(xi, b, *groups);
}

// Within-deme block-counting rates -------------------------------------------------

GRates g_rates(const UnitIntervalMeasure& law, int n, double scale) {
  if (n < 2) throw std::invalid_argument("g_rates needs n >= 2");
  GRates g;
  g.n = n;
  g.by_target.assign(static_cast<std::size_t>(n), 0.0);
  for (int k = 1; k <= n - 1; ++k) {
    g.by_target[static_cast<std::size_t>(k)] =
        scale * static_cast<double>(cb::binomial(n, k - 1)) * moment(law, n - k + 1, k - 1);
    g.total_from_sum += g.by_target[static_cast<std::size_t>(k)];
  }
  g.total_closed_form =
      scale * (law.total_mass() - moment(law, 0, n) - static_cast<double>(n) * moment(law, 1, n - 1));
  return g;
}

// Fast dynamics ----------------------------------------------------------------------

RateRow<StructuredPartition> fast_rates(const ModelParams& params,
                                        const StructuredPartition& state) {
  std::map<StructuredPartition, double> acc;
  const auto& demes = state.demes();
  for (std::size_t d = 0; d < demes.size(); ++d) {
    const int b = static_cast<int>(demes[d].size());
    if (b < 2) continue;
    if (b > 20) throw std::invalid_argument("explicit fast rows are limited to 20 blocks per deme");
    std::vector<double> per_tuple(static_cast<std::size_t>(b + 1), 0.0);
    for (int k = 2; k <= b; ++k) {
      per_tuple[static_cast<std::size_t>(k)] =
          params.deme_rate_scale * moment(params.reproduction_law, k, b - k);
    }
    const std::uint32_t full = (std::uint32_t{1} << b) - 1;
    for (std::uint32_t subset = 1; subset <= full; ++subset) {
      const int k = std::popcount(subset);
      if (k < 2 || per_tuple[static_cast<std::size_t>(k)] <= 0.0) continue;
      std::vector<std::size_t> idx;
      for (int i = 0; i < b; ++i) {
        if (subset & (std::uint32_t{1} << i)) idx.push_back(static_cast<std::size_t>(i));
      }
      acc[merge_blocks(state, d, idx)] += per_tuple[static_cast<std::size_t>(k)];
    }
    if (params.migration_rate > 0.0) {
      for (std::size_t i = 0; i < demes[d].size(); ++i) {
        acc[move_block(state, d, i, kFreshDeme)] += params.migration_rate;
      }
    }
  }
  RateRow<StructuredPartition> row;
  row.entries.reserve(acc.size());
  for (auto& [target, rate] : acc) row.entries.push_back({target, rate});
  return row;
}

// Slow dynamics -------------------------------------------------------------------------

std::uint64_t group_count(const std::vector<int>& sizes) { return cb::unordered_split_count(sizes); }

std::uint64_t multiplicity(const CollisionType& t) {
  // Groups are interchangeable only when both size and merge pattern agree,
  // so the symmetry factor counts identical (size, pattern) pairs.
  std::vector<int> sizes;
  std::map<GatheredGroup, int> identical;
  for (const auto& g : t.groups) {
    sizes.push_back(g.size);
    ++identical[g];
  }
  std::map<int, int> same_size;
  for (int s : sizes) ++same_size[s];
  cb::Wide total = cb::unordered_split_count(sizes);
  for (const auto& [size, count] : same_size) total *= cb::factorial(count);
  for (const auto& [g, count] : identical) total /= cb::factorial(count);
  for (const auto& g : t.groups) {
    auto next = cb::checked_mul(total, cb::unordered_split_count(g.merge_pattern));
    if (!next || *next > UINT64_MAX) throw std::overflow_error("collision multiplicity overflow");
    total = *next;
  }
  return static_cast<std::uint64_t>(total);
}

std::vector<CollisionEvent> enumerate_collisions(int lineages, int max_groups) {
  if (lineages < 2) throw std::invalid_argument("collisions need at least two lineages");
  std::set<CollisionType> types;
  for (int k = 2; k <= lineages; ++k) {
    for (const auto& sizes : cb::integer_partitions(k, 2, max_groups)) {
      // Cartesian product of merge patterns per group.
      std::vector<std::vector<std::vector<int>>> options;
      for (int s : sizes) options.push_back(cb::integer_partitions(s));
      std::vector<std::size_t> pick(sizes.size(), 0);
      while (true) {
        std::vector<GatheredGroup> groups;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
          groups.push_back({sizes[i], options[i][pick[i]]});
        }
        types.insert(make_collision_type(std::move(groups)));
        std::size_t i = 0;
        while (i < pick.size() && ++pick[i] == options[i].size()) pick[i++] = 0;
        if (i == pick.size()) break;
      }
    }
  }
  std::vector<CollisionEvent> out;
  for (const auto& t : types) out.push_back({t, std::nullopt, multiplicity(t)});
  return out;
}

double geo_collision_rate(const ModelParams& params, int lineages, const CollisionType& type) {
  const int k = type.gathered();
  const int r = type.group_count();
  if (k < 2) throw std::invalid_argument("a collision gathers at least two lineages");
  if (k > lineages) throw std::invalid_argument("collision gathers more lineages than are present");
  if (params.extinction_rate == 0.0) return 0.0;
  const int N = params.deme_size;
  const int K = params.source_demes;
  double total = 0.0;
  for (int s = 0; s <= lineages - k && r + s <= K; ++s) {
    cb::ExactRatio coef;
    coef.multiply(cb::binomial(lineages - k, s));
    coef.multiply(cb::falling_factorial(K, r + s));
    for (int i = 0; i < k + s; ++i) coef.divide(static_cast<std::uint64_t>(K));
    for (const auto& g : type.groups) {
      coef.multiply(cb::falling_factorial(N, g.parents()));
      for (int i = 0; i < g.size; ++i) coef.divide(static_cast<std::uint64_t>(N));
    }
    const double c = coef.value();
    if (c == 0.0) continue;
    total += c * moment(params.extinction_law, k + s, lineages - k - s);
  }
  return params.extinction_rate * total;
}

double simple_collision_rate(const ModelParams& params, const CollisionType& type) {
  if (!type.is_pair() || params.migration_rate == 0.0) return 0.0;
  const double N = params.deme_size;
  const bool merges = type.groups[0].parents() == 1;
  return 2.0 * params.migration_rate * (merges ? 1.0 / N : (N - 1.0) / N);
}

double collision_rate(const ModelParams& params, int lineages, const CollisionType& type) {
  return geo_collision_rate(params, lineages, type) + simple_collision_rate(params, type);
}

RateRow<CollisionEvent> slow_rates(const ModelParams& params, const StructuredPartition& state) {
  if (!is_scattered(state)) {
    throw std::invalid_argument("slow rates are defined on scattered states only");
  }
  const int m = state.block_count();
  RateRow<CollisionEvent> row;
  if (m < 2) return row;
  if (m > kMaxEnumerationSize) {
    throw std::invalid_argument("explicit slow rows are limited to 8 blocks");
  }
  std::map<CollisionType, std::pair<double, std::uint64_t>> cache;
  for_each_set_partition(m, [&](const std::vector<int>& a, int classes) {
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(classes));
    for (int i = 0; i < m; ++i) groups[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])].push_back(i);
    std::erase_if(groups, [](const auto& g) { return g.size() < 2; });
    if (groups.empty()) return;
    // Every way of splitting each gathered group into merge classes.
    std::vector<std::vector<std::vector<std::vector<int>>>> splits;
    for (const auto& g : groups) {
      std::vector<std::vector<std::vector<int>>> options;
      for_each_set_partition(static_cast<int>(g.size()), [&](const std::vector<int>& b, int parts) {
        std::vector<std::vector<int>> cls(static_cast<std::size_t>(parts));
        for (std::size_t i = 0; i < g.size(); ++i) cls[static_cast<std::size_t>(b[i])].push_back(g[i]);
        options.push_back(std::move(cls));
      });
      splits.push_back(std::move(options));
    }
    std::vector<std::size_t> pick(splits.size(), 0);
    while (true) {
      CollisionAssignment assignment;
      for (std::size_t i = 0; i < splits.size(); ++i) assignment.groups.push_back(splits[i][pick[i]]);
      const CollisionType type = type_of(assignment);
      auto it = cache.find(type);
      if (it == cache.end()) {
        it = cache.emplace(type, std::make_pair(collision_rate(params, m, type), multiplicity(type))).first;
      }
      if (it->second.first > 0.0) {
        row.entries.push_back(
            {CollisionEvent{type, std::move(assignment), it->second.second}, it->second.first});
      }
      std::size_t i = 0;
      while (i < pick.size() && ++pick[i] == splits[i].size()) pick[i++] = 0;
      if (i == pick.size()) break;
    }
  });
  return row;
}

// Structural checks --------------------------------------------------------------------

namespace {

bool match_profiles(const std::vector<int>& from, const std::vector<int>& to, std::size_t i,
                    std::vector<bool>& used, bool strict) {
  if (i == from.size()) return strict;
  for (std::size_t j = 0; j < to.size(); ++j) {
    if (used[j] || to[j] < 1 || to[j] > from[i]) continue;
    used[j] = true;
    if (match_profiles(from, to, i + 1, used, strict || to[j] < from[i])) return true;
    used[j] = false;
  }
  return false;
}

}  // namespace

bool profile_precedes(const OccupancyProfile& from, const OccupancyProfile& to) {
  if (to.counts.size() < from.counts.size()) return false;
  if (to.total() > from.total()) return false;
  std::vector<bool> used(to.counts.size(), false);
  return match_profiles(from.counts, to.counts, 0, used, false);
}

std::string to_string(const OccupancyProfile& p) {
  std::string out = "{";
  for (std::size_t i = 0; i < p.counts.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(p.counts[i]);
  }
  return out + "}";
}

FastTableDiagnostics validate_fast_table(const std::vector<FastTableEntry>& table, int max_blocks) {
  FastTableDiagnostics diag;
  std::map<OccupancyProfile, double> exit_rate;
  std::set<OccupancyProfile> seen;
  for (const auto& e : table) {
    seen.insert(e.from);
    seen.insert(e.to);
    if (e.rate > 0.0) {
      exit_rate[e.from] += e.rate;
      if (!profile_precedes(e.from, e.to)) {
        diag.incompatible.push_back(to_string(e.from) + " -> " + to_string(e.to));
      }
    }
  }
  for (int total = 1; total <= max_blocks; ++total) {
    for (const auto& counts : cb::integer_partitions(total)) seen.insert(OccupancyProfile{counts});
  }
  for (const auto& p : seen) {
    const bool shared = std::any_of(p.counts.begin(), p.counts.end(), [](int c) { return c >= 2; });
    if (shared && exit_rate[p] <= 0.0) diag.absorbing_shared.push_back(to_string(p));
  }
  return diag;
}

}  // namespace demecoal
