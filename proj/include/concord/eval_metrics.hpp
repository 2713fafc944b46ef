#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "concord/concept.hpp"
#include "concord/error.hpp"
#include "concord/lexical_match.hpp"
#include "concord/orderer.hpp"

namespace concord {

// (concordant - discordant) / C(n, 2). nullopt when n < 2.
inline std::optional<double> kendall_tau(std::span<const ConceptId> candidate, std::span<const ConceptId> reference) {
  if (!detail::same_set(candidate, reference)) throw Error(Errc::invalid_input, "kendall_tau needs two permutations of one set");
  require_distinct(candidate, Errc::invalid_input, "permutation");
  const std::size_t n = candidate.size();
  if (n < 2) return std::nullopt;
  std::vector<std::size_t> ref_pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    ref_pos[i] = static_cast<std::size_t>(std::find(reference.begin(), reference.end(), candidate[i]) - reference.begin());
  }
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      (ref_pos[i] < ref_pos[j]) ? ++concordant : ++discordant;
    }
  }
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  return static_cast<double>(concordant - discordant) / pairs;
}

inline std::optional<double> best_tau(std::span<const ConceptId> candidate,
                                      const std::vector<std::vector<ConceptId>>& references) {
  if (references.empty()) throw Error(Errc::invalid_input, "best_tau needs at least one reference");
  std::optional<double> best;
  for (const auto& ref : references) {
    const auto t = kendall_tau(candidate, ref);
    if (t && (!best || *t > *best)) best = t;
  }
  return best;
}

inline double coverage(const TokenizedSentence& sent, std::span<const ConceptId> concepts,
                       const LexicalMatcher& matcher = {}) {
  if (concepts.empty()) throw Error(Errc::invalid_input, "coverage needs a non-empty concept set");
  std::size_t hit = 0;
  for (const auto& c : concepts) hit += matcher.match_position(c, sent).has_value();
  return static_cast<double>(hit) / static_cast<double>(concepts.size());
}

inline double coverage(std::string_view sentence, std::span<const ConceptId> concepts, const LexicalMatcher& matcher = {}) {
  return coverage(tokenize(sentence), concepts, matcher);
}

struct EvalRecord {
  std::string id;
  std::string strategy;  // optional label for breakdowns
  std::optional<double> tau;
  double coverage = 0.0;
  std::size_t shared_concepts = 0;
  std::vector<std::string> flags;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["id"] = id;
    if (!strategy.empty()) j["strategy"] = strategy;
    j["tau"] = tau ? nlohmann::ordered_json(*tau) : nlohmann::ordered_json(nullptr);
    j["coverage"] = coverage;
    j["shared_concepts"] = shared_concepts;
    j["flags"] = flags;
    return j;
  }
};

inline constexpr const char* kTauUndefinedFlag = "tau-undefined";

namespace detail {

inline std::vector<ConceptId> restrict_to(std::span<const ConceptId> seq, std::span<const ConceptId> keep) {
  std::vector<ConceptId> out;
  for (const auto& c : seq) {
    if (std::find(keep.begin(), keep.end(), c) != keep.end()) out.push_back(c);
  }
  return out;
}

// Best tau of `candidate` over the references, each comparison restricted to
// the concepts present in both.
inline void score_against(EvalRecord& rec, std::span<const ConceptId> candidate,
                          std::span<const ConceptId> input_set, const std::vector<std::string>& references,
                          const LexicalMatcher& matcher) {
  if (references.empty()) throw Error(Errc::invalid_input, "no reference sentences");
  for (const auto& ref_sentence : references) {
    const auto ref = matched_concepts(tokenize(ref_sentence), input_set, matcher);
    const auto shared = restrict_to(candidate, ref);
    if (shared.size() < 2) continue;
    const auto t = kendall_tau(shared, restrict_to(ref, shared));
    if (!rec.tau || *t > *rec.tau || (*t == *rec.tau && shared.size() > rec.shared_concepts)) {
      rec.tau = t;
      rec.shared_concepts = shared.size();
    }
  }
  if (!rec.tau) rec.flags.emplace_back(kTauUndefinedFlag);
}

}  // namespace detail

// Scores a generated sentence: the candidate ordering is the order in which
// input concepts appear in it.
inline EvalRecord extract_and_score(std::string id, std::string_view generated_sentence,
                                    std::span<const ConceptId> input_set, const std::vector<std::string>& references,
                                    const LexicalMatcher& matcher = {}) {
  validate_set(input_set);
  EvalRecord rec;
  rec.id = std::move(id);
  const auto sent = tokenize(generated_sentence);
  const auto candidate = matched_concepts(sent, input_set, matcher);
  rec.coverage = static_cast<double>(candidate.size()) / static_cast<double>(input_set.size());
  for (const auto& c : input_set) {
    if (std::find(candidate.begin(), candidate.end(), c) == candidate.end()) rec.flags.push_back("concept-missing:" + c.str());
  }
  detail::score_against(rec, candidate, input_set, references, matcher);
  return rec;
}

// Scores an ordering directly (Original/Random/Probabilistic rows); coverage
// is 1 by construction.
inline EvalRecord score_ordering(std::string id, std::span<const ConceptId> ordering, std::span<const ConceptId> input_set,
                                 const std::vector<std::string>& references, const LexicalMatcher& matcher = {}) {
  validate_set(input_set);
  if (!detail::same_set(ordering, input_set)) throw Error(Errc::invalid_ordering, "ordering for '" + id + "' is not a permutation of its concept set");
  EvalRecord rec;
  rec.id = std::move(id);
  rec.coverage = 1.0;
  detail::score_against(rec, ordering, input_set, references, matcher);
  return rec;
}

struct EvalSummary {
  std::size_t records = 0;
  std::size_t tau_defined = 0;
  std::size_t tau_undefined = 0;
  std::size_t degraded = 0;  // any flag
  std::optional<double> mean_tau;
  std::optional<double> mean_coverage_pct;

  nlohmann::ordered_json to_json() const {
    auto opt = [](const std::optional<double>& v, double scale) {
      return v ? nlohmann::ordered_json(std::round(*v * scale) / scale) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json j;
    j["records"] = records;
    j["tau_defined"] = tau_defined;
    j["tau_undefined"] = tau_undefined;
    j["degraded"] = degraded;
    j["mean_tau"] = opt(mean_tau, 1000.0);
    j["mean_coverage_pct"] = opt(mean_coverage_pct, 10.0);
    j["mean_tau_raw"] = mean_tau ? nlohmann::ordered_json(*mean_tau) : nlohmann::ordered_json(nullptr);
    j["mean_coverage_pct_raw"] =
        mean_coverage_pct ? nlohmann::ordered_json(*mean_coverage_pct) : nlohmann::ordered_json(nullptr);
    return j;
  }
};

struct EvalReport {
  static constexpr const char* kInclusionRule =
      "mean_tau over records with tau defined (>= 2 concepts shared with some reference); "
      "mean_coverage over all records";

  EvalSummary overall;
  std::map<std::string, EvalSummary> by_strategy;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["inclusion_rule"] = kInclusionRule;
    j["overall"] = overall.to_json();
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [k, v] : by_strategy) per[k] = v.to_json();
    j["by_strategy"] = per;
    return j;
  }

  // Aligned plain-text table: tau to three decimals, coverage to one.
  std::string to_text() const {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %8s %10s %8s %10s %9s\n", "strategy", "records", "tau", "undef",
                  "coverage%", "degraded");
    out += line;
    auto row = [&](const std::string& name, const EvalSummary& s) {
      char tau[32] = "-", cov[32] = "-";
      if (s.mean_tau) std::snprintf(tau, sizeof tau, "%.3f", *s.mean_tau);
      if (s.mean_coverage_pct) std::snprintf(cov, sizeof cov, "%.1f", *s.mean_coverage_pct);
      std::snprintf(line, sizeof line, "%-16s %8zu %10s %8zu %10s %9zu\n", name.c_str(), s.records, tau,
                    s.tau_undefined, cov, s.degraded);
      out += line;
    };
    for (const auto& [k, v] : by_strategy) row(k, v);
    row("all", overall);
    return out;
  }
};

namespace detail {

inline EvalSummary summarize(std::span<const EvalRecord* const> recs) {
  EvalSummary s;
  double tau_sum = 0.0, cov_sum = 0.0;
  for (const EvalRecord* r : recs) {
    ++s.records;
    cov_sum += r->coverage;
    if (!r->flags.empty()) ++s.degraded;
    if (r->tau) {
      ++s.tau_defined;
      tau_sum += *r->tau;
    } else {
      ++s.tau_undefined;
    }
  }
  if (s.tau_defined) s.mean_tau = tau_sum / static_cast<double>(s.tau_defined);
  if (s.records) s.mean_coverage_pct = 100.0 * cov_sum / static_cast<double>(s.records);
  return s;
}

}  // namespace detail

inline EvalReport aggregate(std::span<const EvalRecord> records) {
  EvalReport report;
  std::vector<const EvalRecord*> all;
  std::map<std::string, std::vector<const EvalRecord*>> groups;
  for (const auto& r : records) {
    all.push_back(&r);
    if (!r.strategy.empty()) groups[r.strategy].push_back(&r);
  }
  report.overall = detail::summarize(all);
  for (const auto& [k, v] : groups) report.by_strategy[k] = detail::summarize(v);
  return report;
}

}  // namespace concord
