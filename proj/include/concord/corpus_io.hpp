#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "concord/concept.hpp"
#include "concord/error.hpp"
#include "concord/line_source.hpp"

namespace concord {

inline constexpr std::size_t kMinConcepts = 2;
inline constexpr std::size_t kMaxConcepts = 10;

struct Instance {
  std::string id;
  std::vector<ConceptId> concepts;  // Original order
  std::vector<std::string> references;

  friend bool operator==(const Instance&, const Instance&) = default;
};

// FNV-1a over the sorted concept labels joined by '#'.
inline std::string concept_set_id(std::span<const ConceptId> concepts) {
  std::vector<std::string> labels;
  for (const auto& c : concepts) labels.push_back(c.str());
  std::sort(labels.begin(), labels.end());
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) h = (h ^ static_cast<unsigned char>('#')) * 1099511628211ULL;
    for (unsigned char c : labels[i]) h = (h ^ c) * 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "cs-%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

// Throws Errc::validation describing the first violated invariant.
inline Instance instance_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::validation, "expected a JSON object");
  if (!j.contains("concepts") || !j["concepts"].is_array()) throw Error(Errc::validation, "missing 'concepts' array");
  if (!j.contains("references") || !j["references"].is_array()) throw Error(Errc::validation, "missing 'references' array");
  Instance inst;
  for (const auto& c : j["concepts"]) {
    if (!c.is_string()) throw Error(Errc::validation, "concept is not a string");
    auto id = ConceptId::parse(c.get<std::string>());
    if (!id) throw Error(Errc::validation, "invalid concept '" + c.get<std::string>() + "'");
    if (std::find(inst.concepts.begin(), inst.concepts.end(), *id) != inst.concepts.end()) {
      throw Error(Errc::validation, "duplicate concept '" + id->str() + "'");
    }
    inst.concepts.push_back(std::move(*id));
  }
  if (inst.concepts.size() < kMinConcepts || inst.concepts.size() > kMaxConcepts) {
    throw Error(Errc::validation, "concept count " + std::to_string(inst.concepts.size()) + " outside [2, 10]");
  }
  for (const auto& r : j["references"]) {
    if (!r.is_string() || is_blank(r.get<std::string>())) throw Error(Errc::validation, "blank or non-string reference");
    inst.references.push_back(r.get<std::string>());
  }
  if (inst.references.empty()) throw Error(Errc::validation, "no references");
  if (j.contains("id") && !j["id"].is_null()) {
    if (!j["id"].is_string() || j["id"].get<std::string>().empty()) throw Error(Errc::validation, "'id' must be a non-empty string");
    inst.id = j["id"].get<std::string>();
  } else {
    inst.id = concept_set_id(inst.concepts);
  }
  return inst;
}

inline nlohmann::ordered_json instance_to_json(const Instance& inst) {
  nlohmann::ordered_json j;
  j["id"] = inst.id;
  j["concepts"] = nlohmann::ordered_json::array();
  for (const auto& c : inst.concepts) j["concepts"].push_back(c.str());
  j["references"] = inst.references;
  return j;
}

// Canonical JSONL: one instance per line, keys in id/concepts/references order.
inline void write_instances(std::ostream& out, std::span<const Instance> instances) {
  for (const auto& inst : instances) out << instance_to_json(inst).dump() << '\n';
}

struct LineProblem {
  std::size_t line = 0;
  std::string message;
};

struct LoadedInstances {
  std::vector<Instance> instances;
  std::vector<LineProblem> problems;
};

template <typename Src>
LoadedInstances parse_instances(Src&& lines, const std::string& name, bool lenient) {
  LoadedInstances out;
  std::string line;
  std::size_t lineno = 0;
  while (lines.next(line)) {
    ++lineno;
    if (is_blank(line)) continue;
    try {
      const auto j = nlohmann::json::parse(line, nullptr, true);
      out.instances.push_back(instance_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      out.problems.push_back({lineno, std::string("invalid JSON: ") + e.what()});
    } catch (const Error& e) {
      out.problems.push_back({lineno, e.what()});
    }
    if (!lenient && !out.problems.empty()) {
      throw Error(Errc::validation, name + ":" + std::to_string(out.problems.back().line) + ": " + out.problems.back().message);
    }
  }
  if (out.instances.empty()) throw Error(Errc::zero_instances, "no valid instances in '" + name + "'");
  return out;
}

inline LoadedInstances load_instances(const std::string& path, bool lenient = false) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "'");
  return parse_instances(IstreamLines(in), path, lenient);
}

enum class Split { Train, Dev, Test };

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "dev" || s == "validation") return Split::Dev;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

// Distinct concept sets per split in the public release.
inline std::size_t published_set_count(Split s) {
  switch (s) {
    case Split::Train: return 32651;
    case Split::Dev: return 993;
    case Split::Test: return 1497;
  }
  return 0;
}

struct ImportStats {
  std::string layout;
  std::size_t source_rows = 0;
  std::size_t rows_rejected = 0;  // unusable concept list
  std::size_t instances = 0;
  std::size_t references = 0;
  std::size_t sets_without_references = 0;
  std::size_t published_sets = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["layout"] = layout;
    j["source_rows"] = source_rows;
    j["rows_rejected"] = rows_rejected;
    j["instances"] = instances;
    j["references"] = references;
    j["sets_without_references"] = sets_without_references;
    j["published_sets"] = published_sets;
    return j;
  }
};

struct ImportResult {
  std::vector<Instance> instances;
  ImportStats stats;
};

namespace detail {

class Grouper {
 public:
  void add(std::vector<std::string> raw_concepts, const std::vector<std::string>& targets, ImportStats& stats) {
    std::vector<ConceptId> concepts;
    for (auto& r : raw_concepts) {
      for (char& c : r) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      }
      auto id = ConceptId::parse(r);
      if (!id || std::find(concepts.begin(), concepts.end(), *id) != concepts.end()) {
        ++stats.rows_rejected;
        return;
      }
      concepts.push_back(std::move(*id));
    }
    if (concepts.size() < kMinConcepts || concepts.size() > kMaxConcepts) {
      ++stats.rows_rejected;
      return;
    }
    const std::string key = concept_set_id(concepts);
    auto [it, inserted] = index_.try_emplace(key, groups_.size());
    if (inserted) groups_.push_back({key, std::move(concepts), {}});
    for (const auto& t : targets) {
      if (!is_blank(t)) groups_[it->second].references.push_back(t);
    }
  }

  std::vector<Instance> finish(ImportStats& stats) {
    std::vector<Instance> out;
    for (auto& g : groups_) {
      if (g.references.empty()) {
        ++stats.sets_without_references;
        continue;
      }
      stats.references += g.references.size();
      out.push_back(std::move(g));
    }
    stats.instances = out.size();
    return out;
  }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<Instance> groups_;
};

inline std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<std::string> json_strings(const nlohmann::json& v) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& x : v) {
      if (x.is_string()) out.push_back(x.get<std::string>());
    }
  }
  return out;
}

}  // namespace detail

// Adapts the public release layouts to canonical instances, grouping rows with
// the same concept set:
//   jsonl  {"concept_set": "a#b#c", "scene": [...]}        (official release)
//   jsonl  {"concepts": [...], "target": "..."}            (row-per-sentence mirrors)
//   text   *.src_alpha.txt with a line-aligned *.tgt.txt   (seq2seq release)
inline ImportResult import_commongen(const std::string& src_path, Split split) {
  std::ifstream in(src_path);
  if (!in) throw Error(Errc::io, "cannot open '" + src_path + "'");
  ImportResult result;
  ImportStats& stats = result.stats;
  stats.published_sets = published_set_count(split);
  detail::Grouper grouper;

  std::string first;
  while (std::getline(in, first) && is_blank(first)) {
  }
  in.clear();
  in.seekg(0);
  const bool json_layout = !first.empty() && first.find_first_not_of(" \t") != std::string::npos &&
                           first[first.find_first_not_of(" \t")] == '{';

  IstreamLines lines(in);
  std::string line;
  if (json_layout) {
    std::size_t lineno = 0;
    while (lines.next(line)) {
      ++lineno;
      if (is_blank(line)) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw Error(Errc::adapter, src_path + ":" + std::to_string(lineno) + ": not a JSON object");
      }
      ++stats.source_rows;
      if (j.contains("concept_set") && j["concept_set"].is_string()) {
        stats.layout = "jsonl:concept_set+scene";
        const auto targets = j.contains("scene") ? detail::json_strings(j["scene"])
                                                 : detail::json_strings(j.value("target", nlohmann::json()));
        grouper.add(detail::split_on(j["concept_set"].get<std::string>(), '#'), targets, stats);
      } else if (j.contains("concepts") && j["concepts"].is_array()) {
        stats.layout = "jsonl:concepts+target";
        const auto targets = j.contains("target") ? detail::json_strings(j["target"])
                                                  : detail::json_strings(j.value("references", nlohmann::json()));
        grouper.add(detail::json_strings(j["concepts"]), targets, stats);
      } else {
        std::string fields;
        for (const auto& [k, v] : j.items()) fields += (fields.empty() ? "" : ", ") + k;
        throw Error(Errc::adapter, "unrecognized CommonGen layout in '" + src_path + "'; detected fields: [" + fields +
                                       "]; expected concept_set+scene or concepts+target");
      }
    }
  } else {
    std::string tgt_path = src_path;
    const auto pos = tgt_path.find("src_alpha");
    if (pos == std::string::npos) {
      throw Error(Errc::adapter, "unrecognized CommonGen layout in '" + src_path +
                                     "'; plain-text input must be a *.src_alpha.txt file with a matching *.tgt.txt");
    }
    tgt_path.replace(pos, 9, "tgt");
    std::ifstream tin(tgt_path);
    if (!tin) throw Error(Errc::adapter, "missing target file '" + tgt_path + "' for '" + src_path + "'");
    IstreamLines targets(tin);
    std::string target;
    while (lines.next(line)) {
      if (!targets.next(target)) throw Error(Errc::adapter, "'" + tgt_path + "' has fewer lines than '" + src_path + "'");
      ++stats.source_rows;
      grouper.add(detail::split_on(line, ' '), {target}, stats);
    }
    stats.layout = "text:src_alpha+tgt";
  }
  if (stats.source_rows == 0) throw Error(Errc::zero_instances, "no rows in '" + src_path + "'");
  result.instances = grouper.finish(stats);
  return result;
}

}  // namespace concord
