#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "concord/concept.hpp"
#include "concord/error.hpp"
#include "concord/line_source.hpp"

namespace concord {

using VertexId = std::uint32_t;

// Maps a knowledge-graph node URI ("/c/en/<term>[/pos/...]") or a bare label
// to a concept. Non-English, multiword (underscore) and empty terms yield
// nullopt.
inline std::optional<ConceptId> normalize_concept(std::string_view raw) {
  std::string_view term = raw;
  if (raw.starts_with("/c/")) {
    std::string_view rest = raw.substr(3);
    const auto slash = rest.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    if (rest.substr(0, slash) != "en") return std::nullopt;
    rest = rest.substr(slash + 1);
    term = rest.substr(0, rest.find('/'));
  } else if (raw.find('/') != std::string_view::npos) {
    return std::nullopt;
  }
  if (term.empty() || term.find('_') != std::string_view::npos) return std::nullopt;
  std::string lowered(term);
  for (char& c : lowered) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return ConceptId::parse(lowered);
}

// "/r/IsA" -> "IsA"; bare names pass through.
inline std::string relation_name(std::string_view rel) {
  if (rel.starts_with("/r/")) rel.remove_prefix(3);
  return std::string(rel.substr(0, rel.find('/')));
}

struct RelationFilter {
  std::set<std::string> allow;  // empty: allow all
  std::set<std::string> deny;

  bool accepts(const std::string& relation) const {
    if (!allow.empty() && !allow.contains(relation)) return false;
    return !deny.contains(relation);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["allow"] = allow.empty() ? nlohmann::ordered_json("all") : nlohmann::ordered_json(allow);
    j["deny"] = deny;
    return j;
  }
};

struct LoadSummary {
  std::string source;
  std::uint64_t rows_read = 0;
  std::uint64_t rows_skipped = 0;           // malformed
  std::uint64_t rows_relation_filtered = 0;
  std::uint64_t rows_concept_filtered = 0;  // non-English or multiword endpoint
  std::uint64_t rows_self_loop = 0;
  std::uint64_t vertices = 0;
  std::uint64_t edges = 0;
  RelationFilter filter;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["source"] = source;
    j["rows_read"] = rows_read;
    j["rows_skipped"] = rows_skipped;
    j["rows_relation_filtered"] = rows_relation_filtered;
    j["rows_concept_filtered"] = rows_concept_filtered;
    j["rows_self_loop"] = rows_self_loop;
    j["vertices"] = vertices;
    j["edges"] = edges;
    j["relation_filter"] = filter.to_json();
    return j;
  }

  friend bool operator==(const LoadSummary& a, const LoadSummary& b) { return a.to_json() == b.to_json(); }
};

// Immutable undirected graph in CSR form. Vertex ids follow label order, so
// sorted neighbor ids are also sorted by label.
class ConceptGraph {
 public:
  ConceptGraph() = default;

  std::size_t vertex_count() const noexcept { return labels_.size(); }
  std::uint64_t edge_count() const noexcept { return neighbors_.size() / 2; }
  const LoadSummary& summary() const noexcept { return summary_; }

  const ConceptId& label(VertexId v) const { return labels_.at(v); }

  std::optional<VertexId> find(const ConceptId& c) const {
    const auto it = std::lower_bound(labels_.begin(), labels_.end(), c);
    if (it == labels_.end() || *it != c) return std::nullopt;
    return static_cast<VertexId>(it - labels_.begin());
  }

  std::span<const VertexId> adjacent(VertexId v) const {
    return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
  }

  friend bool operator==(const ConceptGraph& a, const ConceptGraph& b) {
    return a.labels_ == b.labels_ && a.offsets_ == b.offsets_ && a.neighbors_ == b.neighbors_ &&
           a.summary_ == b.summary_;
  }

  // Builds from an undirected edge list over labels. Self-loops and
  // duplicates (in either direction) are dropped.
  static ConceptGraph from_edges(const std::vector<std::pair<ConceptId, ConceptId>>& edges, LoadSummary summary = {}) {
    std::set<ConceptId> names;
    for (const auto& [a, b] : edges) {
      names.insert(a);
      names.insert(b);
    }
    std::vector<ConceptId> labels(names.begin(), names.end());
    auto id_of = [&](const ConceptId& c) {
      return static_cast<VertexId>(std::lower_bound(labels.begin(), labels.end(), c) - labels.begin());
    };
    std::vector<std::pair<VertexId, VertexId>> ids;
    ids.reserve(edges.size() * 2);
    for (const auto& [a, b] : edges) {
      if (a == b) continue;
      ids.emplace_back(id_of(a), id_of(b));
      ids.emplace_back(id_of(b), id_of(a));
    }
    return from_parts(std::move(labels), std::move(ids), std::move(summary));
  }

  void save_snapshot(const std::string& path) const;
  static ConceptGraph load_snapshot(const std::string& path);

  static constexpr char kMagic[8] = {'C', 'O', 'N', 'C', 'G', 'R', 'P', 'H'};
  static constexpr std::uint32_t kSnapshotVersion = 1;

  // labels must be sorted and unique; ids are directed entries that already
  // contain both directions of every edge.
  static ConceptGraph from_parts(std::vector<ConceptId> labels, std::vector<std::pair<VertexId, VertexId>> ids,
                                 LoadSummary summary) {
    ConceptGraph g;
    g.labels_ = std::move(labels);
    g.assemble(std::move(ids));
    summary.vertices = g.vertex_count();
    summary.edges = g.edge_count();
    g.summary_ = std::move(summary);
    return g;
  }

 private:
  // Takes directed (u, v) entries already containing both directions.
  void assemble(std::vector<std::pair<VertexId, VertexId>> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    offsets_.assign(labels_.size() + 1, 0);
    for (const auto& e : ids) ++offsets_[e.first + 1];
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
    neighbors_.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) neighbors_[i] = ids[i].second;
  }

  std::vector<ConceptId> labels_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<VertexId> neighbors_;
  LoadSummary summary_;
};

// Sorted-by-label neighbor list; empty when c is not in the graph.
inline std::vector<ConceptId> neighbors(const ConceptGraph& graph, const ConceptId& c) {
  std::vector<ConceptId> out;
  if (const auto v = graph.find(c)) {
    for (VertexId n : graph.adjacent(*v)) out.push_back(graph.label(n));
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace detail

// Accepts either full assertion rows (uri, relation, start, end, metadata...)
// or bare triples (relation, start, end). Anything with fewer than three
// fields or an empty relation/node field is counted as skipped.
template <typename Src>
ConceptGraph load_graph(Src&& lines, const RelationFilter& filter, std::string source = {}) {
  LoadSummary summary;
  summary.source = std::move(source);
  summary.filter = filter;

  std::unordered_map<std::string, VertexId> index;
  std::vector<std::string> names;
  std::vector<std::pair<VertexId, VertexId>> ids;

  auto intern = [&](const ConceptId& c) {
    auto [it, inserted] = index.try_emplace(c.str(), static_cast<VertexId>(names.size()));
    if (inserted) names.push_back(c.str());
    return it->second;
  };

  std::string line;
  while (lines.next(line)) {
    if (line.empty()) continue;
    ++summary.rows_read;
    const auto fields = detail::split_tabs(line);
    std::string_view rel, start, end;
    if (fields.size() >= 4) {
      rel = fields[1], start = fields[2], end = fields[3];
    } else if (fields.size() == 3) {
      rel = fields[0], start = fields[1], end = fields[2];
    } else {
      ++summary.rows_skipped;
      continue;
    }
    if (rel.empty() || start.empty() || end.empty()) {
      ++summary.rows_skipped;
      continue;
    }
    if (!filter.accepts(relation_name(rel))) {
      ++summary.rows_relation_filtered;
      continue;
    }
    const auto a = normalize_concept(start);
    const auto b = normalize_concept(end);
    if (!a || !b) {
      ++summary.rows_concept_filtered;
      continue;
    }
    if (*a == *b) {
      ++summary.rows_self_loop;
      continue;
    }
    const VertexId u = intern(*a);
    const VertexId v = intern(*b);
    ids.emplace_back(u, v);
    ids.emplace_back(v, u);
  }

  if (ids.empty()) throw Error(Errc::empty_graph, "no usable edges in '" + summary.source + "'");

  // Re-number in label order.
  std::vector<VertexId> order(names.size());
  for (VertexId i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](VertexId x, VertexId y) { return names[x] < names[y]; });
  std::vector<VertexId> rank(names.size());
  for (VertexId r = 0; r < order.size(); ++r) rank[order[r]] = r;
  for (auto& [u, v] : ids) u = rank[u], v = rank[v];

  std::vector<ConceptId> labels;
  labels.reserve(names.size());
  for (VertexId r = 0; r < order.size(); ++r) labels.push_back(*ConceptId::parse(names[order[r]]));
  return ConceptGraph::from_parts(std::move(labels), std::move(ids), std::move(summary));
}

inline ConceptGraph load_graph_file(const std::string& path, const RelationFilter& filter = {}) {
  return load_graph(GzipLines(path), filter, path);
}

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error(Errc::io, "truncated graph snapshot");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

inline std::string get_bytes(std::istream& in, std::size_t n) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw Error(Errc::io, "truncated graph snapshot");
  return s;
}

}  // namespace detail

// Layout (little-endian): magic[8], u32 version, u32 summary length,
// summary JSON, u64 vertex count, per vertex {u32 length, bytes},
// u64 offsets[V + 1], u32 neighbors[offsets[V]].
inline void ConceptGraph::save_snapshot(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write '" + path + "'");
  out.write(kMagic, sizeof kMagic);
  detail::put_le<std::uint32_t>(out, kSnapshotVersion);
  const std::string meta = summary_.to_json().dump();
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  detail::put_le<std::uint64_t>(out, labels_.size());
  for (const auto& l : labels_) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.str().size()));
    out.write(l.str().data(), static_cast<std::streamsize>(l.str().size()));
  }
  for (auto o : offsets_) detail::put_le<std::uint64_t>(out, o);
  for (auto n : neighbors_) detail::put_le<std::uint32_t>(out, n);
  if (!out) throw Error(Errc::io, "write failed for '" + path + "'");
}

inline bool is_graph_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  return in.read(magic, sizeof magic) && std::equal(magic, magic + 8, ConceptGraph::kMagic);
}

inline ConceptGraph ConceptGraph::load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "'");
  const std::string magic = detail::get_bytes(in, sizeof kMagic);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw Error(Errc::io, "'" + path + "' is not a graph snapshot");
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != kSnapshotVersion) {
    throw Error(Errc::io, "unsupported snapshot version " + std::to_string(version));
  }
  const auto meta = nlohmann::json::parse(detail::get_bytes(in, detail::get_le<std::uint32_t>(in)));

  ConceptGraph g;
  const auto n = detail::get_le<std::uint64_t>(in);
  g.labels_.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    auto label = detail::get_bytes(in, detail::get_le<std::uint32_t>(in));
    auto c = ConceptId::parse(label);
    if (!c) throw Error(Errc::io, "corrupt snapshot label '" + label + "'");
    g.labels_.push_back(std::move(*c));
  }
  g.offsets_.resize(n + 1);
  for (auto& o : g.offsets_) o = detail::get_le<std::uint64_t>(in);
  g.neighbors_.resize(g.offsets_.back());
  for (auto& v : g.neighbors_) {
    v = detail::get_le<std::uint32_t>(in);
    if (v >= n) throw Error(Errc::io, "corrupt snapshot adjacency");
  }

  LoadSummary& s = g.summary_;
  s.source = meta.at("source").get<std::string>();
  s.rows_read = meta.at("rows_read");
  s.rows_skipped = meta.at("rows_skipped");
  s.rows_relation_filtered = meta.at("rows_relation_filtered");
  s.rows_concept_filtered = meta.at("rows_concept_filtered");
  s.rows_self_loop = meta.at("rows_self_loop");
  s.vertices = meta.at("vertices");
  s.edges = meta.at("edges");
  const auto& rf = meta.at("relation_filter");
  if (rf.at("allow").is_array()) s.filter.allow = rf.at("allow").get<std::set<std::string>>();
  s.filter.deny = rf.at("deny").get<std::set<std::string>>();
  return g;
}

// Snapshot when the file carries the snapshot magic, otherwise a dump.
inline ConceptGraph open_graph(const std::string& path, const RelationFilter& filter = {}) {
  return is_graph_snapshot(path) ? ConceptGraph::load_snapshot(path) : load_graph_file(path, filter);
}

}  // namespace concord
