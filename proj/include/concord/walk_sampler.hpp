#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "concord/concept.hpp"
#include "concord/concept_graph.hpp"
#include "concord/error.hpp"
#include "concord/rng.hpp"

namespace concord {

struct WalkConfig {
  std::size_t max_path_concepts = 5;
  std::size_t walks_per_start = 100;
  std::uint64_t seed = 0;
  // nullopt counts every pair on a path.
  std::optional<std::set<ConceptId>> vocabulary;

  void validate() const {
    if (max_path_concepts < 2) throw Error(Errc::invalid_input, "max_path_concepts must be >= 2");
    if (walks_per_start < 1) throw Error(Errc::invalid_input, "walks_per_start must be >= 1");
  }

  bool counts(const ConceptId& c) const { return !vocabulary || vocabulary->contains(c); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["max_path_concepts"] = max_path_concepts;
    j["walks_per_start"] = walks_per_start;
    j["seed"] = seed;
    j["revisit_policy"] = "self-avoiding";
    j["direction"] = "undirected";
    j["pair_rule"] = "first-occurrence, once per path";
    j["vocabulary_size"] = vocabulary ? nlohmann::ordered_json(vocabulary->size()) : nlohmann::ordered_json("all");
    return j;
  }
};

// #(a -> b): number of paths on which a occurs before b.
class PrecedenceCounts {
 public:
  using Map = std::map<ConceptPair, std::uint64_t>;

  void add(const ConceptId& a, const ConceptId& b, std::uint64_t n = 1) {
    if (a == b) throw Error(Errc::invalid_pair, "diagonal pair (" + a.str() + ", " + a.str() + ")");
    if (n) counts_[{a, b}] += n;
  }

  std::uint64_t get(const ConceptId& a, const ConceptId& b) const {
    const auto it = counts_.find({a, b});
    return it == counts_.end() ? 0 : it->second;
  }

  std::size_t size() const noexcept { return counts_.size(); }
  bool empty() const noexcept { return counts_.empty(); }
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& [k, v] : counts_) t += v;
    return t;
  }

  Map::const_iterator begin() const noexcept { return counts_.begin(); }
  Map::const_iterator end() const noexcept { return counts_.end(); }

  PrecedenceCounts& operator+=(const PrecedenceCounts& other) {
    for (const auto& [k, v] : other.counts_) counts_[k] += v;
    return *this;
  }

  friend bool operator==(const PrecedenceCounts&, const PrecedenceCounts&) = default;

  // concept_a<TAB>concept_b<TAB>count, lexicographic order.
  void write_tsv(std::ostream& out) const {
    for (const auto& [k, v] : counts_) out << k.first << '\t' << k.second << '\t' << v << '\n';
  }

  static PrecedenceCounts read_tsv(std::istream& in) {
    PrecedenceCounts pc;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = detail::split_tabs(line);
      auto a = f.size() == 3 ? ConceptId::parse(f[0]) : std::nullopt;
      auto b = f.size() == 3 ? ConceptId::parse(f[1]) : std::nullopt;
      if (!a || !b) throw Error(Errc::validation, "counts line " + std::to_string(lineno) + " is malformed");
      pc.add(*a, *b, std::stoull(std::string(f[2])));
    }
    return pc;
  }

 private:
  Map counts_;
};

inline PrecedenceCounts merge_counts(PrecedenceCounts a, const PrecedenceCounts& b) {
  a += b;
  return a;
}

// Increments for one path: each in-vocabulary pair (u, v) with u's first
// occurrence before v's first occurrence, at most once per path.
inline std::vector<ConceptPair> count_path_pairs(std::span<const ConceptId> path,
                                                 const std::optional<std::set<ConceptId>>& vocabulary) {
  std::vector<ConceptId> firsts;
  for (const auto& c : path) {
    if (vocabulary && !vocabulary->contains(c)) continue;
    if (std::find(firsts.begin(), firsts.end(), c) == firsts.end()) firsts.push_back(c);
  }
  std::vector<ConceptPair> out;
  for (std::size_t i = 0; i < firsts.size(); ++i) {
    for (std::size_t j = i + 1; j < firsts.size(); ++j) out.emplace_back(firsts[i], firsts[j]);
  }
  return out;
}

inline void apply_path(PrecedenceCounts& counts, std::span<const ConceptId> path,
                       const std::optional<std::set<ConceptId>>& vocabulary) {
  for (const auto& [a, b] : count_path_pairs(path, vocabulary)) counts.add(a, b);
}

struct SampleStats {
  std::size_t starts_used = 0;
  std::size_t starts_missing = 0;
  std::uint64_t walks = 0;
  std::uint64_t visited_vertices = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["starts_used"] = starts_used;
    j["starts_missing"] = starts_missing;
    j["walks"] = walks;
    j["mean_path_concepts"] = walks ? static_cast<double>(visited_vertices) / static_cast<double>(walks) : 0.0;
    return j;
  }
};

namespace detail {

// Self-avoiding walk from `start`: each step picks uniformly among
// unvisited neighbors; stops at max_len vertices or when stuck.
inline void walk_once(const ConceptGraph& g, VertexId start, std::size_t max_len, Rng& rng,
                      std::vector<VertexId>& path, std::vector<VertexId>& scratch) {
  path.clear();
  path.push_back(start);
  auto visited = [&](VertexId v) { return std::find(path.begin(), path.end(), v) != path.end(); };
  while (path.size() < max_len) {
    const auto adj = g.adjacent(path.back());
    if (adj.empty()) break;
    std::optional<VertexId> next;
    // Rejection is exact-uniform over unvisited neighbors; fall back to an
    // explicit scan when most neighbors may already be on the path.
    if (adj.size() > 2 * path.size()) {
      for (int tries = 0; tries < 8 && !next; ++tries) {
        const VertexId cand = adj[uniform_below(rng, adj.size())];
        if (!visited(cand)) next = cand;
      }
    }
    if (!next) {
      scratch.clear();
      for (VertexId v : adj) {
        if (!visited(v)) scratch.push_back(v);
      }
      if (scratch.empty()) break;
      next = scratch[uniform_below(rng, scratch.size())];
    }
    path.push_back(*next);
  }
}

inline std::uint64_t pack(VertexId a, VertexId b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

}  // namespace detail

// Walks for starts[begin, end) into a vertex-keyed table. Start i always
// uses the stream seeded by mix_seed(cfg.seed, i).
inline void sample_shard(const ConceptGraph& g, std::span<const std::optional<VertexId>> starts, std::size_t begin,
                         std::size_t end, const WalkConfig& cfg, const std::vector<bool>& counted,
                         std::unordered_map<std::uint64_t, std::uint64_t>& out, SampleStats& stats) {
  std::vector<VertexId> path, scratch, firsts;
  for (std::size_t i = begin; i < end; ++i) {
    if (!starts[i]) continue;
    Rng rng(mix_seed(cfg.seed, i));
    for (std::size_t w = 0; w < cfg.walks_per_start; ++w) {
      detail::walk_once(g, *starts[i], cfg.max_path_concepts, rng, path, scratch);
      ++stats.walks;
      stats.visited_vertices += path.size();
      firsts.clear();
      for (VertexId v : path) {
        if (counted[v]) firsts.push_back(v);
      }
      for (std::size_t a = 0; a < firsts.size(); ++a) {
        for (std::size_t b = a + 1; b < firsts.size(); ++b) ++out[detail::pack(firsts[a], firsts[b])];
      }
    }
  }
}

// Samples cfg.walks_per_start walks from every start present in the graph.
// Output is a pure function of (graph, starts order, cfg); `workers` only
// changes how the starts are split.
inline PrecedenceCounts sample_walks(const ConceptGraph& g, std::span<const ConceptId> starts, const WalkConfig& cfg,
                                     std::size_t workers = 1, SampleStats* stats_out = nullptr) {
  cfg.validate();
  std::vector<std::optional<VertexId>> ids;
  ids.reserve(starts.size());
  SampleStats stats;
  for (const auto& s : starts) {
    ids.push_back(g.find(s));
    ids.back() ? ++stats.starts_used : ++stats.starts_missing;
  }
  if (stats.starts_used == 0) throw Error(Errc::empty_seed, "none of the " + std::to_string(starts.size()) +
                                                                " start concepts are in the graph");

  std::vector<bool> counted(g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) counted[v] = cfg.counts(g.label(v));

  workers = std::clamp<std::size_t>(workers, 1, ids.size());
  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> shard_counts(workers);
  std::vector<SampleStats> shard_stats(workers);
  const std::size_t chunk = (ids.size() + workers - 1) / workers;
  auto run = [&](std::size_t w) {
    const std::size_t b = std::min(ids.size(), w * chunk);
    const std::size_t e = std::min(ids.size(), b + chunk);
    sample_shard(g, ids, b, e, cfg, counted, shard_counts[w], shard_stats[w]);
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }

  // Summing vertex-keyed shards in any order gives the same totals.
  std::unordered_map<std::uint64_t, std::uint64_t> merged = std::move(shard_counts[0]);
  for (std::size_t w = 1; w < workers; ++w) {
    for (const auto& [k, v] : shard_counts[w]) merged[k] += v;
  }
  PrecedenceCounts counts;
  for (const auto& [k, v] : merged) {
    counts.add(g.label(static_cast<VertexId>(k >> 32)), g.label(static_cast<VertexId>(k & 0xFFFFFFFFu)), v);
  }
  for (const auto& s : shard_stats) {
    stats.walks += s.walks;
    stats.visited_vertices += s.visited_vertices;
  }
  if (stats_out) *stats_out = stats;
  return counts;
}

}  // namespace concord
