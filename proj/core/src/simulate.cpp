#include "demecoal/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "demecoal/combinatorics.hpp"

namespace demecoal {

namespace cb = combinatorics;

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kFastMerge: return "fast-merge";
    case EventKind::kFastMove: return "fast-move";
    case EventKind::kSimpleCollision: return "simple-collision";
    case EventKind::kExtinctionCollision: return "extinction-collision";
    case EventKind::kInstantaneousScatter: return "instantaneous-scatter";
    case EventKind::kMerger: return "merger";
  }
  return "?";
}

EventKind parse_event_kind(const std::string& s) {
  for (auto k : {EventKind::kFastMerge, EventKind::kFastMove, EventKind::kSimpleCollision,
                 EventKind::kExtinctionCollision, EventKind::kInstantaneousScatter,
                 EventKind::kMerger}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

const StructuredPartition& PathSample::state_at(double t) const {
  const StructuredPartition* current = &initial;
  for (const auto& e : events) {
    if (e.time > t) break;
    current = &e.state;
  }
  return *current;
}

const StructuredPartition& PathSample::final_state() const {
  return events.empty() ? initial : events.back().state;
}

std::vector<Jump> unstructured_jumps(const PathSample& path) {
  std::vector<Jump> jumps;
  const StructuredPartition* before = &path.initial;
  std::size_t i = 0;
  while (i < path.events.size()) {
    std::size_t j = i + 1;
    while (j < path.events.size() && path.events[j].kind == EventKind::kInstantaneousScatter &&
           path.events[j].time == path.events[i].time) {
      ++j;
    }
    const auto& last = path.events[j - 1].state;
    auto u_before = unstructured(*before);
    auto u_after = unstructured(last);
    if (u_before != u_after) {
      jumps.push_back({path.events[i].time, path.events[i].kind, std::move(u_before), std::move(u_after)});
    }
    before = &last;
    i = j;
  }
  return jumps;
}

namespace {

std::string format_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  return buf;
}

// Flags collisions whose scattering phase returns to the prior state.
void mark_ghosts(PathSample& path) {
  const StructuredPartition* before = &path.initial;
  std::size_t i = 0;
  while (i < path.events.size()) {
    std::size_t j = i + 1;
    while (j < path.events.size() && path.events[j].kind == EventKind::kInstantaneousScatter &&
           path.events[j].time == path.events[i].time) {
      ++j;
    }
    auto& head = path.events[i];
    const bool collision = head.kind == EventKind::kSimpleCollision ||
                           head.kind == EventKind::kExtinctionCollision;
    head.same_state = collision && path.events[j - 1].state == *before;
    before = &path.events[j - 1].state;
    i = j;
  }
}

}  // namespace

std::string to_csv(const PathSample& path) {
  std::string out = "time,kind,partition\n";
  out += "0,initial," + to_string(path.initial) + "\n";
  for (const auto& e : path.events) {
    out += format_time(e.time) + "," + to_string(e.kind) + "," + to_string(e.state) + "\n";
  }
  out += format_time(path.terminal_time) + ",terminal," + to_string(path.final_state()) + "\n";
  return out;
}

PathSample path_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "time,kind,partition") {
    throw std::invalid_argument("path CSV must start with the header time,kind,partition");
  }
  PathSample path;
  bool have_initial = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw std::invalid_argument("malformed path line '" + line + "'");
    }
    const double time = std::stod(line.substr(0, c1));
    const std::string kind = line.substr(c1 + 1, c2 - c1 - 1);
    auto state = parse_structured(line.substr(c2 + 1));
    if (kind == "initial") {
      path.initial = std::move(state);
      have_initial = true;
    } else if (kind == "terminal") {
      path.terminal_time = time;
    } else {
      path.events.push_back({time, parse_event_kind(kind), std::move(state), false});
    }
  }
  if (!have_initial) throw std::invalid_argument("path CSV lacks the initial row");
  mark_ghosts(path);
  return path;
}

// Shared within-deme kernel ------------------------------------------------------------

namespace {

/// Within-deme merger weights per deme occupancy b: weight[k] is the total
/// rate of k-mergers, C(b, k) * scale * moment(k, b - k).
class MergeWeights {
 public:
  MergeWeights(const ModelParams& params, int max_blocks) {
    by_occupancy_.resize(static_cast<std::size_t>(max_blocks + 1));
    totals_.assign(static_cast<std::size_t>(max_blocks + 1), 0.0);
    for (int b = 2; b <= max_blocks; ++b) {
      auto& w = by_occupancy_[static_cast<std::size_t>(b)];
      w.assign(static_cast<std::size_t>(b + 1), 0.0);
      for (int k = 2; k <= b; ++k) {
        w[static_cast<std::size_t>(k)] = params.deme_rate_scale *
                                         static_cast<double>(cb::binomial(b, k)) *
                                         moment(params.reproduction_law, k, b - k);
        totals_[static_cast<std::size_t>(b)] += w[static_cast<std::size_t>(k)];
      }
    }
  }

  double total(std::size_t b) const { return b < 2 ? 0.0 : totals_.at(b); }

  int draw_size(std::size_t b, Rng& rng) const {
    const auto& w = by_occupancy_.at(b);
    double u = rng.uniform() * totals_[b];
    for (std::size_t k = 2; k < w.size(); ++k) {
      if (u < w[k]) return static_cast<int>(k);
      u -= w[k];
    }
    for (std::size_t k = w.size() - 1; k >= 2; --k) {
      if (w[k] > 0.0) return static_cast<int>(k);
    }
    throw std::logic_error("no merger size with positive rate");
  }

 private:
  std::vector<std::vector<double>> by_occupancy_;
  std::vector<double> totals_;
};

/// Merges k uniformly chosen blocks of deme d.
void merge_random_subset(std::vector<Block>& deme, int k, Rng& rng) {
  const std::size_t b = deme.size();
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(b - i));
    std::swap(deme[i], deme[j]);
  }
  Block merged = 0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) merged |= deme[i];
  deme.erase(deme.begin(), deme.begin() + k);
  deme.push_back(merged);
}

bool all_scattered(const std::vector<std::vector<Block>>& demes) {
  return std::all_of(demes.begin(), demes.end(), [](const auto& d) { return d.size() <= 1; });
}

/// One jump of the fast process. Returns the holding time before it.
double fast_jump(std::vector<std::vector<Block>>& demes, const ModelParams& params,
                 const MergeWeights& weights, Rng& rng, EventKind& kind) {
  double total = 0.0;
  for (const auto& d : demes) {
    if (d.size() < 2) continue;
    total += weights.total(d.size()) + params.migration_rate * static_cast<double>(d.size());
  }
  if (!(total > 0.0)) throw std::logic_error("fast process has no exit from a shared deme");
  const double wait = rng.exponential(total);
  double u = rng.uniform() * total;
  std::size_t chosen = demes.size();
  for (std::size_t i = 0; i < demes.size(); ++i) {
    const auto& d = demes[i];
    if (d.size() < 2) continue;
    chosen = i;
    const double merge = weights.total(d.size());
    const double move = params.migration_rate * static_cast<double>(d.size());
    if (u < merge) {
      merge_random_subset(demes[i], weights.draw_size(d.size(), rng), rng);
      kind = EventKind::kFastMerge;
      return wait;
    }
    u -= merge;
    if (u < move) break;
    u -= move;
  }
  // Rounding can leave u just past the last shared deme: treat it as a move there.
  auto& deme = demes[chosen];
  if (params.migration_rate <= 0.0) {
    merge_random_subset(deme, weights.draw_size(deme.size(), rng), rng);
    kind = EventKind::kFastMerge;
    return wait;
  }
  const std::size_t idx = static_cast<std::size_t>(rng.below(deme.size()));
  const Block moved = deme[idx];
  deme.erase(deme.begin() + static_cast<std::ptrdiff_t>(idx));
  demes.push_back({moved});
  kind = EventKind::kFastMove;
  return wait;
}

std::vector<std::vector<Block>> raw_demes(const StructuredPartition& p) { return p.demes(); }

int max_occupancy(const StructuredPartition& p) {
  int m = 0;
  for (const auto& d : p.demes()) m = std::max(m, static_cast<int>(d.size()));
  return m;
}

/// Runs the scattering phase, logging each sub-step at `time` when a path is given.
StructuredPartition scatter(const StructuredPartition& start, const ModelParams& params,
                            const MergeWeights& weights, Rng& rng, double time,
                            PathSample* log, int* transitions) {
  // `start` may live inside log->events, so nothing below reads it after a push.
  const int n = start.n();
  auto demes = raw_demes(start);
  int steps = 0;
  StructuredPartition current = start;
  while (!all_scattered(demes)) {
    EventKind kind{};
    fast_jump(demes, params, weights, rng, kind);
    ++steps;
    current = canonical_unchecked(n, demes);
    if (log) log->events.push_back({time, EventKind::kInstantaneousScatter, current, false});
  }
  if (transitions) *transitions = steps;
  return current;
}

}  // namespace

StructuredPartition run_fast_to_absorption(const StructuredPartition& start,
                                           const ModelParams& params, Rng& rng,
                                           int* transitions) {
  const MergeWeights weights(params, max_occupancy(start));
  return scatter(start, params, weights, rng, 0.0, nullptr, transitions);
}

PathSample simulate_fast_process(const StructuredPartition& start, const ModelParams& params,
                                 Rng& rng) {
  const MergeWeights weights(params, max_occupancy(start));
  PathSample path;
  path.initial = start;
  auto demes = raw_demes(start);
  double t = 0.0;
  while (!all_scattered(demes)) {
    EventKind kind{};
    t += fast_jump(demes, params, weights, rng, kind);
    path.events.push_back({t, kind, canonical_unchecked(start.n(), demes), false});
  }
  path.terminal_time = t;
  return path;
}

// Limit process -------------------------------------------------------------------------

LimitProcess::LimitProcess(ModelParams params, int max_blocks) : params_(std::move(params)) {
  params_.validate();
  if (max_blocks < 1 || max_blocks > kMaxSampleSize) {
    throw std::invalid_argument("limit process needs 1 <= max_blocks <= 64");
  }
  tables_.resize(static_cast<std::size_t>(max_blocks + 1));
  for (int m = 2; m <= max_blocks; ++m) {
    auto& table = tables_[static_cast<std::size_t>(m)];
    for (const auto& event : enumerate_collisions(m, params_.source_demes)) {
      const double each = collision_rate(params_, m, event.type);
      if (!(each > 0.0)) continue;
      const double count = static_cast<double>(cb::binomial(m, event.type.gathered())) *
                           static_cast<double>(event.multiplicity);
      table.entries.push_back(
          {event.type, count * each, simple_collision_rate(params_, event.type) / each});
      table.total += count * each;
    }
  }
}

double LimitProcess::total_rate(int m) const {
  if (m < 2) return 0.0;
  return tables_.at(static_cast<std::size_t>(m)).total;
}

CollisionAssignment LimitProcess::draw_assignment(const CollisionType& type, int m,
                                                  Rng& rng) const {
  // A uniform permutation cut into consecutive groups and classes gives every
  // concrete collision of the type the same probability.
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  const auto k = static_cast<std::size_t>(type.gathered());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  CollisionAssignment a;
  std::size_t pos = 0;
  for (const auto& g : type.groups) {
    std::vector<std::vector<int>> classes;
    for (int l : g.merge_pattern) {
      std::vector<int> cls(order.begin() + static_cast<std::ptrdiff_t>(pos),
                           order.begin() + static_cast<std::ptrdiff_t>(pos) + l);
      std::sort(cls.begin(), cls.end());
      classes.push_back(std::move(cls));
      pos += static_cast<std::size_t>(l);
    }
    a.groups.push_back(std::move(classes));
  }
  return a;
}

PathSample LimitProcess::simulate(const StructuredPartition& start, const StopRule& stop,
                                  Rng& rng) const {
  if (!(stop.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (start.block_count() >= static_cast<int>(tables_.size())) {
    throw std::invalid_argument("start state has more blocks than the rate tables cover");
  }
  const MergeWeights weights(params_, start.block_count());
  PathSample path;
  path.initial = start;
  StructuredPartition state = start;
  if (!is_scattered(state)) state = scatter(state, params_, weights, rng, 0.0, &path, nullptr);
  double t = 0.0;
  while (true) {
    const int m = state.block_count();
    if (stop.until_mrca && m == 1) {
      path.terminal_time = t;
      break;
    }
    const auto& table = tables_[static_cast<std::size_t>(m)];
    if (!(table.total > 0.0)) {
      path.terminal_time = stop.horizon;
      break;
    }
    const double next = t + rng.exponential(table.total);
    if (next > stop.horizon) {
      path.terminal_time = stop.horizon;
      break;
    }
    t = next;
    double u = rng.uniform() * table.total;
    const TypeEntry* chosen = &table.entries.back();
    for (const auto& e : table.entries) {
      if (u < e.total) {
        chosen = &e;
        break;
      }
      u -= e.total;
    }
    const auto assignment = draw_assignment(chosen->type, m, rng);
    const EventKind kind = rng.bernoulli(chosen->simple_share) ? EventKind::kSimpleCollision
                                                                : EventKind::kExtinctionCollision;
    const std::size_t head = path.events.size();
    path.events.push_back({t, kind, apply_collision(state, assignment), false});
    auto after = scatter(StructuredPartition(path.events[head].state), params_, weights, rng, t, &path, nullptr);
    path.events[head].same_state = after == state;
    state = std::move(after);
  }
  return path;
}

PathSample simulate_limit_process(const StructuredPartition& start, const ModelParams& params,
                                  const StopRule& stop, Rng& rng) {
  return LimitProcess(params, std::max(start.block_count(), 1)).simulate(start, stop, rng);
}

// Finite number of demes -------------------------------------------------------------------

namespace {

/// K distinct labels from [0, D) (Floyd's algorithm).
std::vector<long> distinct_labels(long D, int K, Rng& rng) {
  std::vector<long> out;
  out.reserve(static_cast<std::size_t>(K));
  for (long j = D - K; j < D; ++j) {
    const long t = static_cast<long>(rng.below(static_cast<std::uint64_t>(j + 1)));
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(j);
    }
  }
  return out;
}

struct SourceDeme {
  long occupied = -1;              // index of the occupied deme it is, if any
  std::vector<Block> residents;    // surviving lineages, one per individual 0..c-1
  std::unordered_map<std::uint64_t, Block> arrivals;  // newcomers keyed by parent
};

// Applies one mass extinction. Returns true if any lineage was affected.
bool extinction_event(std::vector<std::vector<Block>>& demes, const ModelParams& params, long D,
                      Rng& rng) {
  const double y = sample(params.extinction_law, rng);
  const std::size_t occ = demes.size();
  std::vector<bool> extinct(occ, false);
  bool any = false;
  for (std::size_t d = 0; d < occ; ++d) {
    extinct[d] = rng.bernoulli(y);
    any = any || extinct[d];
  }
  if (!any) return false;
  const int K = params.source_demes;
  const auto N = static_cast<std::uint64_t>(params.deme_size);
  std::vector<SourceDeme> sources(static_cast<std::size_t>(K));
  const auto labels = distinct_labels(D, K, rng);
  std::vector<long> source_of(occ, -1);
  for (std::size_t q = 0; q < sources.size(); ++q) {
    const long label = labels[q];
    if (label < static_cast<long>(occ)) {
      sources[q].occupied = label;
      source_of[static_cast<std::size_t>(label)] = static_cast<long>(q);
      if (!extinct[static_cast<std::size_t>(label)]) {
        sources[q].residents = demes[static_cast<std::size_t>(label)];
      }
    }
  }
  for (std::size_t d = 0; d < occ; ++d) {
    if (!extinct[d]) continue;
    for (Block b : demes[d]) {
      auto& src = sources[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(K)))];
      const std::uint64_t parent = rng.below(N);
      if (parent < src.residents.size()) {
        src.residents[parent] |= b;
      } else {
        src.arrivals[parent] |= b;
      }
    }
  }
  std::vector<std::vector<Block>> next;
  for (std::size_t d = 0; d < occ; ++d) {
    if (extinct[d] || source_of[d] >= 0) continue;
    next.push_back(std::move(demes[d]));
  }
  for (auto& src : sources) {
    std::vector<Block> deme = std::move(src.residents);
    for (const auto& [parent, b] : src.arrivals) deme.push_back(b);
    if (!deme.empty()) next.push_back(std::move(deme));
  }
  demes = std::move(next);
  return true;
}

}  // namespace

PathSample simulate_finite_d(const StructuredPartition& start, const ModelParams& params,
                             const FiniteDConfig& config, const StopRule& stop, Rng& rng) {
  params.validate();
  if (!(stop.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const long D = config.demes;
  if (D < 2) throw std::invalid_argument("finite-D simulation needs D >= 2");
  if (static_cast<long>(start.deme_count()) > D) {
    throw std::invalid_argument("start occupies more demes than D");
  }
  if (params.source_demes > D) throw std::invalid_argument("K cannot exceed D");
  if (max_occupancy(start) > params.deme_size) {
    throw std::invalid_argument("a deme cannot hold more lineages than individuals (N)");
  }
  // Internal clock: the collecting time scale. Natural units are D times longer.
  const double unit = config.time_rescale ? 1.0 : static_cast<double>(D);
  const double horizon = stop.horizon / unit;
  const double Dd = static_cast<double>(D);
  const double m1 = params.migration_rate;
  const MergeWeights weights(params, start.n());
  const auto N = static_cast<std::uint64_t>(params.deme_size);

  PathSample path;
  path.initial = start;
  auto demes = raw_demes(start);
  int blocks = start.block_count();
  double t = 0.0;
  while (true) {
    if (stop.until_mrca && blocks == 1) {
      path.terminal_time = t * unit;
      break;
    }
    const double occ = static_cast<double>(demes.size());
    double merge_total = 0.0;
    double shared_lineages = 0.0;
    for (const auto& d : demes) {
      merge_total += Dd * weights.total(d.size());
      if (d.size() >= 2) shared_lineages += static_cast<double>(d.size());
    }
    const double collide_total = static_cast<double>(blocks) * m1 * (occ - 1.0);
    const double fresh_total = shared_lineages * m1 * (Dd - occ);
    const double total = merge_total + collide_total + fresh_total + params.extinction_rate;
    if (!(total > 0.0)) {
      path.terminal_time = stop.horizon;
      break;
    }
    t += rng.exponential(total);
    if (t > horizon) {
      path.terminal_time = stop.horizon;
      break;
    }
    double u = rng.uniform() * total;
    EventKind kind{};
    bool logged = true;
    if (u < merge_total) {
      std::size_t d = 0;
      for (; d + 1 < demes.size(); ++d) {
        const double w = Dd * weights.total(demes[d].size());
        if (u < w) break;
        u -= w;
      }
      while (demes[d].size() < 2) --d;  // rounding guard
      merge_random_subset(demes[d], weights.draw_size(demes[d].size(), rng), rng);
      kind = EventKind::kFastMerge;
    } else if ((u -= merge_total) < collide_total) {
      // A uniformly chosen lineage lands on a uniform individual of another occupied deme.
      std::uint64_t pick = rng.below(static_cast<std::uint64_t>(blocks));
      std::size_t from = 0;
      while (pick >= demes[from].size()) pick -= demes[from++].size();
      std::size_t to = static_cast<std::size_t>(rng.below(demes.size() - 1));
      if (to >= from) ++to;
      const Block moved = demes[from][pick];
      demes[from].erase(demes[from].begin() + static_cast<std::ptrdiff_t>(pick));
      const std::uint64_t individual = rng.below(N);
      if (individual < demes[to].size()) {
        demes[to][individual] |= moved;
      } else {
        demes[to].push_back(moved);
      }
      if (demes[from].empty()) demes.erase(demes.begin() + static_cast<std::ptrdiff_t>(from));
      kind = EventKind::kSimpleCollision;
    } else if ((u -= collide_total) < fresh_total) {
      std::uint64_t pick = rng.below(static_cast<std::uint64_t>(shared_lineages));
      std::size_t from = 0;
      while (true) {
        if (demes[from].size() >= 2) {
          if (pick < demes[from].size()) break;
          pick -= demes[from].size();
        }
        ++from;
      }
      const Block moved = demes[from][pick];
      demes[from].erase(demes[from].begin() + static_cast<std::ptrdiff_t>(pick));
      demes.push_back({moved});
      kind = EventKind::kFastMove;
    } else {
      const auto before = canonical_unchecked(start.n(), demes);
      logged = extinction_event(demes, params, D, rng);
      kind = EventKind::kExtinctionCollision;
      if (logged) {
        auto after = canonical_unchecked(start.n(), demes);
        const bool same = after == before;
        path.events.push_back({t * unit, kind, std::move(after), same});
        blocks = path.events.back().state.block_count();
      }
      continue;
    }
    if (logged) {
      path.events.push_back({t * unit, kind, canonical_unchecked(start.n(), demes), false});
      blocks = path.events.back().state.block_count();
    }
  }
  return path;
}

// Reference coalescents ------------------------------------------------------------------

PathSample simulate_lambda_coalescent(const UnitIntervalMeasure& lambda, int n, Rng& rng,
                                      const StopRule& stop) {
  if (!(stop.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const auto start = StructuredPartition::scattered_singletons(n);
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(n + 1));
  std::vector<double> totals(static_cast<std::size_t>(n + 1), 0.0);
  for (int b = 2; b <= n; ++b) {
    auto& w = weights[static_cast<std::size_t>(b)];
    w.assign(static_cast<std::size_t>(b + 1), 0.0);
    for (int k = 2; k <= b; ++k) {
      w[static_cast<std::size_t>(k)] = static_cast<double>(cb::binomial(b, k)) * lambda_rate(lambda, b, k);
      totals[static_cast<std::size_t>(b)] += w[static_cast<std::size_t>(k)];
    }
  }
  PathSample path;
  path.initial = start;
  std::vector<Block> blocks;
  for (const auto& d : start.demes()) blocks.push_back(d.front());
  double t = 0.0;
  while (true) {
    const auto b = blocks.size();
    if (stop.until_mrca && b == 1) {
      path.terminal_time = t;
      break;
    }
    const double total = totals[b];
    if (!(total > 0.0)) {
      path.terminal_time = stop.horizon;
      break;
    }
    t += rng.exponential(total);
    if (t > stop.horizon) {
      path.terminal_time = stop.horizon;
      break;
    }
    double u = rng.uniform() * total;
    int k = static_cast<int>(b);
    for (std::size_t j = 2; j <= b; ++j) {
      if (u < weights[b][j]) {
        k = static_cast<int>(j);
        break;
      }
      u -= weights[b][j];
    }
    merge_random_subset(blocks, k, rng);
    std::vector<std::vector<Block>> demes;
    for (Block x : blocks) demes.push_back({x});
    path.events.push_back({t, EventKind::kMerger, canonical_unchecked(n, std::move(demes)), false});
  }
  return path;
}

std::vector<XiMergerType> xi_merger_types(const XiMeasure& xi, int b) {
  std::vector<XiMergerType> out;
  for (int k = 2; k <= b; ++k) {
    for (const auto& sizes : cb::integer_partitions(k, 2)) {
      const double rate = xi_rate(xi, b, sizes);
      if (!(rate > 0.0)) continue;
      out.push_back({sizes, cb::binomial(b, k) * cb::unordered_split_count(sizes), rate});
    }
  }
  return out;
}

PathSample simulate_xi_coalescent(const XiMeasure& xi, int n, Rng& rng, const StopRule& stop) {
  if (!(stop.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const auto start = StructuredPartition::scattered_singletons(n);
  std::vector<std::vector<XiMergerType>> types(static_cast<std::size_t>(n + 1));
  std::vector<double> totals(static_cast<std::size_t>(n + 1), 0.0);
  for (int b = 2; b <= n; ++b) {
    types[static_cast<std::size_t>(b)] = xi_merger_types(xi, b);
    for (const auto& t : types[static_cast<std::size_t>(b)]) {
      totals[static_cast<std::size_t>(b)] += static_cast<double>(t.count) * t.rate;
    }
  }
  PathSample path;
  path.initial = start;
  std::vector<Block> blocks;
  for (const auto& d : start.demes()) blocks.push_back(d.front());
  double t = 0.0;
  while (true) {
    const auto b = blocks.size();
    if (stop.until_mrca && b == 1) {
      path.terminal_time = t;
      break;
    }
    const double total = totals[b];
    if (!(total > 0.0)) {
      path.terminal_time = stop.horizon;
      break;
    }
    t += rng.exponential(total);
    if (t > stop.horizon) {
      path.terminal_time = stop.horizon;
      break;
    }
    double u = rng.uniform() * total;
    const XiMergerType* chosen = &types[b].back();
    for (const auto& type : types[b]) {
      const double w = static_cast<double>(type.count) * type.rate;
      if (u < w) {
        chosen = &type;
        break;
      }
      u -= w;
    }
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(b - i));
      std::swap(blocks[i], blocks[j]);
    }
    std::vector<Block> next;
    std::size_t pos = 0;
    for (int size : chosen->group_sizes) {
      Block merged = 0;
      for (int i = 0; i < size; ++i) merged |= blocks[pos++];
      next.push_back(merged);
    }
    next.insert(next.end(), blocks.begin() + static_cast<std::ptrdiff_t>(pos), blocks.end());
    blocks = std::move(next);
    std::vector<std::vector<Block>> demes;
    for (Block x : blocks) demes.push_back({x});
    path.events.push_back({t, EventKind::kMerger, canonical_unchecked(n, std::move(demes)), false});
  }
  return path;
}

}  // namespace demecoal
