#include "demecoal/partition.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace demecoal {

namespace {

bool block_less(Block a, Block b) { return std::countr_zero(a) < std::countr_zero(b); }

std::string describe_labels(const std::vector<int>& labels) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) os << ',';
    os << labels[i];
  }
  os << '}';
  return os.str();
}

Block full_mask(int n) { return n == 64 ? ~Block{0} : (Block{1} << n) - 1; }

void check_sample_size(int n) {
  if (n < 1 || n > kMaxSampleSize) {
    throw std::invalid_argument("sample size must lie in [1, 64], got " + std::to_string(n));
  }
}

}  // namespace

int min_element(Block b) { return std::countr_zero(b) + 1; }
int block_size(Block b) { return std::popcount(b); }
Block singleton(int label) { return Block{1} << (label - 1); }

std::vector<int> block_elements(Block b) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(std::popcount(b)));
  while (b) {
    out.push_back(std::countr_zero(b) + 1);
    b &= b - 1;
  }
  return out;
}

int OccupancyProfile::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

int StructuredPartition::block_count() const {
  int total = 0;
  for (const auto& d : demes_) total += static_cast<int>(d.size());
  return total;
}

StructuredPartition canonical_unchecked(int n, std::vector<std::vector<Block>> demes) {
  std::erase_if(demes, [](const auto& d) { return d.empty(); });
  for (auto& d : demes) std::sort(d.begin(), d.end(), block_less);
  std::sort(demes.begin(), demes.end(),
            [](const auto& a, const auto& b) { return block_less(a.front(), b.front()); });
  return StructuredPartition(n, std::move(demes));
}

StructuredPartition StructuredPartition::from_demes(int n, std::vector<Deme> demes) {
  check_sample_size(n);
  Block seen = 0;
  const Block universe = full_mask(n);
  for (const auto& deme : demes) {
    for (Block b : deme) {
      if (b == 0) throw std::invalid_argument("empty block");
      if (b & ~universe) {
        throw std::invalid_argument("block " + describe_labels(block_elements(b)) +
                                    " has a label outside [1, " + std::to_string(n) + "]");
      }
      if (b & seen) {
        throw std::invalid_argument("block " + describe_labels(block_elements(b)) +
                                    " overlaps another block");
      }
      seen |= b;
    }
  }
  if (seen != universe) {
    throw std::invalid_argument("blocks do not cover [1, " + std::to_string(n) + "]");
  }
  return canonical_unchecked(n, std::move(demes));
}

StructuredPartition StructuredPartition::from_labels(
    int n, const std::vector<std::vector<std::vector<int>>>& demes) {
  check_sample_size(n);
  std::vector<Deme> masks;
  masks.reserve(demes.size());
  for (const auto& deme : demes) {
    Deme d;
    for (const auto& labels : deme) {
      if (labels.empty()) throw std::invalid_argument("empty block");
      Block b = 0;
      for (int label : labels) {
        if (label < 1 || label > n) {
          throw std::invalid_argument("block " + describe_labels(labels) +
                                      " has a label outside [1, " + std::to_string(n) + "]");
        }
        const Block bit = singleton(label);
        if (b & bit) {
          throw std::invalid_argument("block " + describe_labels(labels) +
                                      " repeats label " + std::to_string(label));
        }
        b |= bit;
      }
      d.push_back(b);
    }
    masks.push_back(std::move(d));
  }
  return from_demes(n, std::move(masks));
}

StructuredPartition StructuredPartition::scattered_singletons(int n) {
  check_sample_size(n);
  std::vector<Deme> demes;
  for (int i = 1; i <= n; ++i) demes.push_back({singleton(i)});
  return StructuredPartition(n, std::move(demes));
}

StructuredPartition StructuredPartition::single_deme_singletons(int n) {
  check_sample_size(n);
  Deme d;
  for (int i = 1; i <= n; ++i) d.push_back(singleton(i));
  return StructuredPartition(n, {std::move(d)});
}

StructuredPartition canonicalize(int n,
                                 const std::vector<std::vector<std::vector<int>>>& raw) {
  return StructuredPartition::from_labels(n, raw);
}

OccupancyProfile occupancy_profile(const StructuredPartition& p) {
  OccupancyProfile out;
  for (const auto& d : p.demes()) out.counts.push_back(static_cast<int>(d.size()));
  std::sort(out.counts.begin(), out.counts.end(), std::greater<>());
  return out;
}

bool is_scattered(const StructuredPartition& p) {
  return std::all_of(p.demes().begin(), p.demes().end(),
                     [](const auto& d) { return d.size() == 1; });
}

StructuredPartition merge_blocks(const StructuredPartition& p, std::size_t deme,
                                 const std::vector<std::size_t>& block_indices) {
  if (deme >= p.deme_count()) throw std::out_of_range("deme index out of range");
  const auto& src = p.demes()[deme];
  std::vector<std::size_t> idx = block_indices;
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  if (idx.size() < 2) throw std::invalid_argument("a merger needs at least two blocks");
  if (idx.back() >= src.size()) {
    throw std::invalid_argument("merger indices must all lie in one deme");
  }
  auto demes = p.demes();
  Block merged = 0;
  for (auto i : idx) merged |= src[i];
  auto& target = demes[deme];
  for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
    target.erase(target.begin() + static_cast<std::ptrdiff_t>(*it));
  }
  target.push_back(merged);
  return canonical_unchecked(p.n(), std::move(demes));
}

StructuredPartition move_block(const StructuredPartition& p, std::size_t source_deme,
                               std::size_t block_index, std::size_t target_deme) {
  if (source_deme >= p.deme_count()) throw std::out_of_range("source deme out of range");
  if (block_index >= p.demes()[source_deme].size()) {
    throw std::out_of_range("block index out of range");
  }
  if (target_deme == source_deme) {
    throw std::invalid_argument("move target must differ from the source deme");
  }
  if (target_deme != kFreshDeme && target_deme >= p.deme_count()) {
    throw std::out_of_range("target deme out of range");
  }
  auto demes = p.demes();
  const Block b = demes[source_deme][block_index];
  demes[source_deme].erase(demes[source_deme].begin() +
                           static_cast<std::ptrdiff_t>(block_index));
  if (target_deme == kFreshDeme) {
    demes.push_back({b});
  } else {
    demes[target_deme].push_back(b);
  }
  return canonical_unchecked(p.n(), std::move(demes));
}

UnstructuredPartition unstructured(const StructuredPartition& p) {
  UnstructuredPartition u{p.n(), {}};
  for (const auto& d : p.demes()) u.blocks.insert(u.blocks.end(), d.begin(), d.end());
  std::sort(u.blocks.begin(), u.blocks.end(), block_less);
  return u;
}

StructuredPartition scattered(const UnstructuredPartition& u) {
  std::vector<std::vector<Block>> demes;
  demes.reserve(u.blocks.size());
  for (Block b : u.blocks) demes.push_back({b});
  return canonical_unchecked(u.n, std::move(demes));
}

StructuredPartition restrict_to(const StructuredPartition& p, int m) {
  if (m < 1 || m > p.n()) throw std::invalid_argument("restriction size out of range");
  const Block keep = full_mask(m);
  std::vector<std::vector<Block>> demes;
  for (const auto& d : p.demes()) {
    std::vector<Block> kept;
    for (Block b : d) {
      if (b & keep) kept.push_back(b & keep);
    }
    demes.push_back(std::move(kept));
  }
  return canonical_unchecked(m, std::move(demes));
}

UnstructuredPartition restrict_to(const UnstructuredPartition& u, int m) {
  if (m < 1 || m > u.n) throw std::invalid_argument("restriction size out of range");
  const Block keep = full_mask(m);
  UnstructuredPartition out{m, {}};
  for (Block b : u.blocks) {
    if (b & keep) out.blocks.push_back(b & keep);
  }
  std::sort(out.blocks.begin(), out.blocks.end(), block_less);
  return out;
}

void for_each_set_partition(int m,
                            const std::function<void(const std::vector<int>&, int)>& visit) {
  if (m == 0) {
    visit({}, 0);
    return;
  }
  // Restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
  std::vector<int> a(static_cast<std::size_t>(m), 0);
  std::vector<int> running_max(static_cast<std::size_t>(m), 0);
  while (true) {
    visit(a, running_max.back() + 1);
    int i = m - 1;
    while (i > 0 && a[static_cast<std::size_t>(i)] > running_max[static_cast<std::size_t>(i - 1)]) --i;
    if (i == 0) return;
    ++a[static_cast<std::size_t>(i)];
    running_max[static_cast<std::size_t>(i)] =
        std::max(running_max[static_cast<std::size_t>(i - 1)], a[static_cast<std::size_t>(i)]);
    for (int j = i + 1; j < m; ++j) {
      a[static_cast<std::size_t>(j)] = 0;
      running_max[static_cast<std::size_t>(j)] = running_max[static_cast<std::size_t>(i)];
    }
  }
}

std::vector<UnstructuredPartition> enumerate_set_partitions(int n) {
  if (n > kMaxEnumerationSize) {
    throw std::invalid_argument("exhaustive enumeration refused for n > " +
                                std::to_string(kMaxEnumerationSize));
  }
  check_sample_size(n);
  std::vector<UnstructuredPartition> out;
  for_each_set_partition(n, [&](const std::vector<int>& a, int classes) {
    UnstructuredPartition u{n, std::vector<Block>(static_cast<std::size_t>(classes), 0)};
    for (int i = 0; i < n; ++i) u.blocks[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])] |= singleton(i + 1);
    out.push_back(std::move(u));
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<StructuredPartition> enumerate_scattered(int n) {
  std::vector<StructuredPartition> out;
  for (const auto& u : enumerate_set_partitions(n)) out.push_back(scattered(u));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<StructuredPartition> enumerate_structured(int n) {
  std::vector<StructuredPartition> out;
  for (const auto& u : enumerate_set_partitions(n)) {
    const int b = static_cast<int>(u.blocks.size());
    for_each_set_partition(b, [&](const std::vector<int>& a, int classes) {
      std::vector<std::vector<Block>> demes(static_cast<std::size_t>(classes));
      for (int i = 0; i < b; ++i) {
        demes[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])].push_back(u.blocks[static_cast<std::size_t>(i)]);
      }
      out.push_back(canonical_unchecked(n, std::move(demes)));
    });
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string to_string(const StructuredPartition& p) {
  std::string out;
  for (std::size_t d = 0; d < p.demes().size(); ++d) {
    if (d) out += '|';
    const auto& deme = p.demes()[d];
    for (std::size_t b = 0; b < deme.size(); ++b) {
      if (b) out += ';';
      const auto labels = block_elements(deme[b]);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(labels[i]);
      }
    }
  }
  return out;
}

std::string to_string(const UnstructuredPartition& u) { return to_string(scattered(u)); }

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

StructuredPartition parse_structured(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw std::invalid_argument("empty partition text");
  std::vector<std::vector<std::vector<int>>> raw;
  int n = 0;
  for (auto deme_text : split(text, '|')) {
    std::vector<std::vector<int>> deme;
    for (auto block_text : split(deme_text, ';')) {
      std::vector<int> block;
      for (auto label_text : split(block_text, ',')) {
        label_text = trim(label_text);
        int value = 0;
        const auto* end = label_text.data() + label_text.size();
        const auto [ptr, ec] = std::from_chars(label_text.data(), end, value);
        if (ec != std::errc{} || ptr != end || label_text.empty()) {
          throw std::invalid_argument("invalid label '" + std::string(label_text) +
                                      "' in partition '" + std::string(text) + "'");
        }
        block.push_back(value);
        n = std::max(n, value);
      }
      deme.push_back(std::move(block));
    }
    raw.push_back(std::move(deme));
  }
  return StructuredPartition::from_labels(n, raw);
}

UnstructuredPartition parse_unstructured(std::string_view text) {
  return unstructured(parse_structured(text));
}

std::vector<int> block_size_profile(const UnstructuredPartition& u) {
  std::vector<int> sizes;
  for (Block b : u.blocks) sizes.push_back(block_size(b));
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  return sizes;
}

std::size_t StructuredPartitionHash::operator()(const StructuredPartition& p) const noexcept {
  std::size_t h = static_cast<std::size_t>(p.n()) * 0x9e3779b97f4a7c15ULL;
  for (const auto& d : p.demes()) {
    for (Block b : d) h = (h ^ b) * 0x100000001b3ULL + 0x7f4a7c15;
    h ^= 0xabcdefULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace demecoal
