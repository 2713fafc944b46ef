#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "concord/concept.hpp"
#include "concord/error.hpp"
#include "concord/lexical_match.hpp"
#include "concord/rng.hpp"
#include "concord/transition_model.hpp"

namespace concord {

enum class Strategy { Original, Random, Probabilistic, Example };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Original: return "original";
    case Strategy::Random: return "random";
    case Strategy::Probabilistic: return "probabilistic";
    case Strategy::Example: return "example";
  }
  return "unknown";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
  for (auto v : {Strategy::Original, Strategy::Random, Strategy::Probabilistic, Strategy::Example}) {
    if (s == strategy_name(v)) return v;
  }
  return std::nullopt;
}

struct Ordering {
  std::vector<ConceptId> concepts;
  Strategy strategy = Strategy::Original;
  std::optional<double> score;  // Probabilistic only
  std::vector<std::string> flags;
};

inline constexpr std::size_t kMaxExhaustiveSet = 10;

inline void validate_set(std::span<const ConceptId> set) {
  if (set.empty()) throw Error(Errc::invalid_set, "concept set is empty");
  require_distinct(set, Errc::invalid_set, "concept set");
}

inline Ordering order_original(std::span<const ConceptId> set) {
  validate_set(set);
  return {{set.begin(), set.end()}, Strategy::Original, std::nullopt, {}};
}

// Fisher-Yates over mt19937_64(seed).
inline Ordering order_random(std::span<const ConceptId> set, std::uint64_t seed) {
  validate_set(set);
  Ordering o{{set.begin(), set.end()}, Strategy::Random, std::nullopt, {}};
  Rng rng(seed);
  fisher_yates(std::span<ConceptId>(o.concepts), rng);
  return o;
}

namespace detail {

// Scores within this relative distance are treated as tied, which keeps the
// first (lexicographically smallest) sequence when equal products are reached
// through differently ordered log sums.
inline bool strictly_better(double score, double best) {
  if (best == -std::numeric_limits<double>::infinity()) return score > best;
  return score > best + 1e-12 * std::max(1.0, std::abs(best));
}

struct ArgmaxSearch {
  const std::vector<std::vector<double>>& logp;
  std::size_t m;
  std::vector<std::size_t> current, best;
  std::vector<bool> used;
  double best_score = -std::numeric_limits<double>::infinity();
  bool found = false;

  void run() {
    current.clear();
    used.assign(m, false);
    for (std::size_t first = 0; first < m; ++first) {
      used[first] = true;
      current.push_back(first);
      extend(0.0);
      current.pop_back();
      used[first] = false;
    }
  }

  // Children are visited in increasing index order, so leaves arrive in
  // lexicographic order of the sorted labels.
  void extend(double prefix) {
    if (current.size() == m) {
      if (!found || strictly_better(prefix, best_score)) {
        found = true;
        best_score = prefix;
        best = current;
      }
      return;
    }
    const std::size_t last = current.back();
    for (std::size_t next = 0; next < m; ++next) {
      if (used[next]) continue;
      used[next] = true;
      current.push_back(next);
      extend(prefix + logp[last][next]);
      current.pop_back();
      used[next] = false;
    }
  }
};

}  // namespace detail

// Exhaustive argmax of the first-order Markov score over all m! orderings
// (2 <= m <= 10). Ties go to the lexicographically smallest sequence.
inline Ordering order_probabilistic(const TransitionTable& table, std::span<const ConceptId> set) {
  validate_set(set);
  if (set.size() < 2) throw Error(Errc::invalid_set, "probabilistic ordering needs at least two concepts");
  if (set.size() > kMaxExhaustiveSet) {
    throw Error(Errc::set_too_large, std::to_string(set.size()) + " concepts exceeds the exhaustive-search bound of " +
                                         std::to_string(kMaxExhaustiveSet));
  }
  std::vector<ConceptId> sorted(set.begin(), set.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  std::vector<std::vector<double>> logp(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j) logp[i][j] = std::log(table.transition_prob(sorted[i], sorted[j]));
    }
  }
  detail::ArgmaxSearch search{logp, m, {}, {}, {}};
  search.run();

  Ordering o{{}, Strategy::Probabilistic, search.best_score, {}};
  for (std::size_t idx : search.best) o.concepts.push_back(sorted[idx]);
  return o;
}

// Concepts found in the sentence, in order of first matched token. Equal
// positions keep input order.
inline std::vector<ConceptId> matched_concepts(const TokenizedSentence& sent, std::span<const ConceptId> set,
                                               const LexicalMatcher& matcher) {
  std::vector<std::pair<std::size_t, std::size_t>> hits;  // (token index, input index)
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (const auto pos = matcher.match_position(set[i], sent)) hits.emplace_back(*pos, i);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<ConceptId> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(set[h.second]);
  return out;
}

inline std::string not_found_flag(const ConceptId& c) { return "concept-not-found-in-reference:" + c.str(); }

// Order of appearance in a reference sentence. Unmatched concepts follow in
// input order, one flag each.
inline Ordering order_example(std::string_view reference_sentence, std::span<const ConceptId> set,
                              const LexicalMatcher& matcher = {}) {
  validate_set(set);
  Ordering o{matched_concepts(tokenize(reference_sentence), set, matcher), Strategy::Example, std::nullopt, {}};
  for (const auto& c : set) {
    if (std::find(o.concepts.begin(), o.concepts.end(), c) == o.concepts.end()) {
      o.concepts.push_back(c);
      o.flags.push_back(not_found_flag(c));
    }
  }
  return o;
}

enum class InputFormat { SpaceDelimited, CommaDelimited, OrderingToken };

inline const char* format_name(InputFormat f) {
  switch (f) {
    case InputFormat::SpaceDelimited: return "space";
    case InputFormat::CommaDelimited: return "comma";
    case InputFormat::OrderingToken: return "token";
  }
  return "unknown";
}

inline std::optional<InputFormat> parse_format(std::string_view s) {
  for (auto f : {InputFormat::SpaceDelimited, InputFormat::CommaDelimited, InputFormat::OrderingToken}) {
    if (s == format_name(f)) return f;
  }
  return std::nullopt;
}

inline constexpr std::string_view kOrderingToken = "[ORDERING]";

namespace detail {

inline std::string join(std::span<const ConceptId> items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i].str();
  }
  return out;
}

inline bool same_set(std::span<const ConceptId> a, std::span<const ConceptId> b) {
  return a.size() == b.size() && std::is_permutation(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

inline std::string format_input(std::span<const ConceptId> unordered, const Ordering& ordering, InputFormat fmt) {
  if (!detail::same_set(unordered, ordering.concepts)) {
    throw Error(Errc::invalid_ordering, "ordering is not a permutation of the concept set");
  }
  switch (fmt) {
    case InputFormat::SpaceDelimited: return detail::join(ordering.concepts, " ");
    case InputFormat::CommaDelimited: return detail::join(ordering.concepts, ", ");
    case InputFormat::OrderingToken:
      return detail::join(unordered, " ") + " " + std::string(kOrderingToken) + " " +
             detail::join(ordering.concepts, " ") + " " + std::string(kOrderingToken);
  }
  throw Error(Errc::invalid_input, "unknown input format");
}

struct ParsedInput {
  std::vector<ConceptId> unordered;  // OrderingToken only
  std::vector<ConceptId> ordered;
};

// Inverse of format_input.
inline ParsedInput parse_input(std::string_view text, InputFormat fmt) {
  auto words = [](std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  };
  auto to_concepts = [](const std::vector<std::string>& ws) {
    std::vector<ConceptId> out;
    for (const auto& w : ws) out.emplace_back(w);
    return out;
  };
  ParsedInput p;
  switch (fmt) {
    case InputFormat::SpaceDelimited:
      p.ordered = to_concepts(words(text));
      break;
    case InputFormat::CommaDelimited: {
      std::vector<std::string> parts;
      std::size_t start = 0;
      for (;;) {
        const auto sep = text.find(", ", start);
        parts.emplace_back(text.substr(start, sep - start));
        if (sep == std::string_view::npos) break;
        start = sep + 2;
      }
      p.ordered = to_concepts(parts);
      break;
    }
    case InputFormat::OrderingToken: {
      const auto ws = words(text);
      const auto t1 = std::find(ws.begin(), ws.end(), kOrderingToken);
      const auto t2 = t1 == ws.end() ? ws.end() : std::find(t1 + 1, ws.end(), kOrderingToken);
      if (t2 == ws.end() || t2 + 1 != ws.end()) throw Error(Errc::invalid_input, "expected two [ORDERING] markers");
      p.unordered = to_concepts({ws.begin(), t1});
      p.ordered = to_concepts({t1 + 1, t2});
      break;
    }
  }
  return p;
}

}  // namespace concord
