#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "concord/concept.hpp"
#include "concord/error.hpp"
#include "concord/walk_sampler.hpp"

namespace concord {

struct EstimateOptions {
  double default_prob = 0.5;  // unseen pairs
  double laplace_alpha = 0.0;  // add-alpha per direction; 0 disables
};

// p(j | i) for ordered concept pairs, estimated from precedence counts as
// #(i -> j) / (#(i -> j) + #(j -> i)).
class TransitionTable {
 public:
  struct Entry {
    double prob = 0.0;
    std::uint64_t support = 0;  // #(i -> j) + #(j -> i)
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  using Map = std::map<ConceptPair, Entry>;

  TransitionTable() = default;
  explicit TransitionTable(EstimateOptions opts) : opts_(opts) {}

  const EstimateOptions& options() const noexcept { return opts_; }
  double default_prob() const noexcept { return opts_.default_prob; }

  // Stores p(b | a) = prob and p(a | b) = 1 - prob.
  void set_pair(const ConceptId& a, const ConceptId& b, double prob, std::uint64_t support) {
    if (a == b) throw Error(Errc::invalid_pair, "diagonal pair (" + a.str() + ", " + a.str() + ")");
    if (!(prob >= 0.0 && prob <= 1.0)) throw Error(Errc::invalid_input, "probability outside [0, 1]");
    // The side >= 0.5 is kept as given and the other is 1 - it, which is
    // exact, so p + q == 1 and 1 - q == p hold bit-for-bit.
    if (prob >= 0.5) {
      entries_[{a, b}] = {prob, support};
      entries_[{b, a}] = {1.0 - prob, support};
    } else {
      const double hi = 1.0 - prob;
      entries_[{b, a}] = {hi, support};
      entries_[{a, b}] = {1.0 - hi, support};
    }
  }

  const Entry* find(const ConceptId& i, const ConceptId& j) const {
    const auto it = entries_.find({i, j});
    return it == entries_.end() ? nullptr : &it->second;
  }

  double transition_prob(const ConceptId& i, const ConceptId& j) const {
    if (i == j) throw Error(Errc::invalid_pair, "transition from '" + i.str() + "' to itself");
    const Entry* e = find(i, j);
    return e ? e->prob : opts_.default_prob;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  Map::const_iterator begin() const noexcept { return entries_.begin(); }
  Map::const_iterator end() const noexcept { return entries_.end(); }

  // Every stored p(j | i) becomes p(i | j).
  TransitionTable reversed() const {
    TransitionTable r(opts_);
    for (const auto& [k, e] : entries_) r.entries_[{k.second, k.first}] = e;
    return r;
  }

  friend bool operator==(const TransitionTable& a, const TransitionTable& b) {
    return a.entries_ == b.entries_ && a.opts_.default_prob == b.opts_.default_prob &&
           a.opts_.laplace_alpha == b.opts_.laplace_alpha;
  }

  nlohmann::ordered_json estimator_json() const {
    nlohmann::ordered_json j;
    j["rule"] = "p(j|i) = #(i->j) / (#(i->j) + #(j->i))";
    j["default_prob"] = opts_.default_prob;
    j["laplace_alpha"] = opts_.laplace_alpha;
    return j;
  }

  // First line: '#' + JSON metadata. Then concept_a<TAB>concept_b<TAB>prob<TAB>support
  // for both directions of every stored pair, in lexicographic order.
  void write(std::ostream& out, nlohmann::ordered_json metadata = nlohmann::ordered_json::object()) const {
    metadata["estimator"] = estimator_json();
    out << '#' << metadata.dump() << '\n';
    char buf[64];
    for (const auto& [k, e] : entries_) {
      std::snprintf(buf, sizeof buf, "%.17g", e.prob);
      out << k.first << '\t' << k.second << '\t' << buf << '\t' << e.support << '\n';
    }
  }

  static TransitionTable read(std::istream& in, nlohmann::json* metadata_out = nullptr) {
    std::string line;
    EstimateOptions opts;
    std::size_t lineno = 0;
    TransitionTable t;
    bool first = true;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (first && line.front() == '#') {
        first = false;
        const auto meta = nlohmann::json::parse(line.substr(1), nullptr, false);
        if (meta.is_discarded()) throw Error(Errc::validation, "transition table header is not valid JSON");
        if (meta.contains("estimator")) {
          opts.default_prob = meta["estimator"].value("default_prob", 0.5);
          opts.laplace_alpha = meta["estimator"].value("laplace_alpha", 0.0);
        }
        if (metadata_out) *metadata_out = meta;
        continue;
      }
      first = false;
      const auto f = detail::split_tabs(line);
      auto a = f.size() == 4 ? ConceptId::parse(f[0]) : std::nullopt;
      auto b = f.size() == 4 ? ConceptId::parse(f[1]) : std::nullopt;
      if (!a || !b || *a == *b) throw Error(Errc::validation, "table line " + std::to_string(lineno) + " is malformed");
      const double p = std::stod(std::string(f[2]));
      if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::validation, "table line " + std::to_string(lineno) + ": bad probability");
      t.entries_[{*a, *b}] = {p, std::stoull(std::string(f[3]))};
    }
    t.opts_ = opts;
    return t;
  }

 private:
  EstimateOptions opts_;
  Map entries_;
};

inline TransitionTable estimate(const PrecedenceCounts& counts, EstimateOptions opts = {}) {
  TransitionTable table(opts);
  for (const auto& [k, forward] : counts) {
    const auto& [a, b] = k;
    if (b < a && counts.get(b, a) > 0) continue;  // handled from the (b, a) side
    const std::uint64_t backward = counts.get(b, a);
    const std::uint64_t support = forward + backward;
    if (support == 0) continue;
    const double num = static_cast<double>(forward) + opts.laplace_alpha;
    const double den = static_cast<double>(support) + 2.0 * opts.laplace_alpha;
    // Divide on the larger side so the complement is taken exactly.
    if (forward >= backward) {
      table.set_pair(a, b, num / den, support);
    } else {
      table.set_pair(b, a, (static_cast<double>(backward) + opts.laplace_alpha) / den, support);
    }
  }
  return table;
}

inline void require_distinct(std::span<const ConceptId> seq, Errc code, const char* what) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t j = i + 1; j < seq.size(); ++j) {
      if (seq[i] == seq[j]) throw Error(code, std::string(what) + " repeats '" + seq[i].str() + "'");
    }
  }
}

// Sum of log p(x_k | x_{k-1}) over consecutive pairs; -inf if any factor is 0.
inline double sequence_log_prob(const TransitionTable& table, std::span<const ConceptId> ordering) {
  if (ordering.size() < 2) throw Error(Errc::invalid_ordering, "ordering needs at least two concepts");
  require_distinct(ordering, Errc::invalid_ordering, "ordering");
  double total = 0.0;
  for (std::size_t k = 1; k < ordering.size(); ++k) total += std::log(table.transition_prob(ordering[k - 1], ordering[k]));
  return total;
}

}  // namespace concord
