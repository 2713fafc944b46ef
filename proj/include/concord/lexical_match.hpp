#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "concord/concept.hpp"
#include "concord/error.hpp"
#include "concord/line_source.hpp"

namespace concord {

struct TokenizedSentence {
  std::vector<std::string> tokens;
  std::string raw;
};

namespace detail {

inline bool word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

inline void push_token(std::string& cur, std::vector<std::string>& out) {
  while (!cur.empty() && cur.back() == '-') cur.pop_back();
  std::size_t lead = 0;
  while (lead < cur.size() && cur[lead] == '-') ++lead;
  if (lead < cur.size()) out.push_back(cur.substr(lead));
  cur.clear();
}

}  // namespace detail

// Lowercases, splits on whitespace and on punctuation other than internal
// hyphens, and drops the possessive clitic ('s). Typographic apostrophes are
// treated as ASCII ones.
inline TokenizedSentence tokenize(std::string_view sentence) {
  TokenizedSentence ts;
  ts.raw = std::string(sentence);

  std::string text;
  text.reserve(sentence.size());
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (sentence.compare(i, 3, "\xE2\x80\x99") == 0) {
      text.push_back('\'');
      i += 2;
    } else {
      char c = sentence[i];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      text.push_back(c);
    }
  }

  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (detail::word_byte(c)) {
      cur.push_back(static_cast<char>(c));
    } else if (c == '-' && !cur.empty()) {
      cur.push_back('-');
    } else if (c == '\'' && i + 1 < text.size() && text[i + 1] == 's' &&
               (i + 2 == text.size() || !detail::word_byte(static_cast<unsigned char>(text[i + 2])))) {
      detail::push_token(cur, ts.tokens);
      ++i;  // skip the 's'
    } else {
      detail::push_token(cur, ts.tokens);
    }
  }
  detail::push_token(cur, ts.tokens);
  return ts;
}

// Lemma candidates reachable by removing one inflectional suffix:
// -ing and -ed (each with undoubling and e-restoration), -d after e,
// -ies -> y, -es, -s.
inline std::vector<std::string> suffix_candidates(std::string_view token) {
  std::vector<std::string> out;
  auto with_variants = [&](std::string_view stem) {
    if (stem.empty()) return;
    out.emplace_back(stem);
    out.emplace_back(std::string(stem) + "e");
    const auto n = stem.size();
    if (n >= 2 && stem[n - 1] == stem[n - 2] && !detail::is_vowel(stem[n - 1])) out.emplace_back(stem.substr(0, n - 1));
  };
  if (token.ends_with("ing")) with_variants(token.substr(0, token.size() - 3));
  if (token.ends_with("ed")) with_variants(token.substr(0, token.size() - 2));
  if (token.ends_with("ed") && token.size() > 2) out.emplace_back(token.substr(0, token.size() - 1));
  if (token.ends_with("ies") && token.size() > 3) out.push_back(std::string(token.substr(0, token.size() - 3)) + "y");
  if (token.ends_with("es") && token.size() > 2) out.emplace_back(token.substr(0, token.size() - 2));
  if (token.ends_with("s") && token.size() > 1) out.emplace_back(token.substr(0, token.size() - 1));
  return out;
}

// Rule-only match.
inline bool matches(std::string_view lemma, std::string_view token) {
  if (token == lemma) return true;
  for (const auto& c : suffix_candidates(token)) {
    if (c == lemma) return true;
  }
  return false;
}

// Matcher with an optional inflected -> lemma dictionary. A token found in
// the dictionary is decided by the dictionary alone.
class LexicalMatcher {
 public:
  LexicalMatcher() = default;
  explicit LexicalMatcher(std::map<std::string, std::string, std::less<>> dictionary)
      : dictionary_(std::move(dictionary)) {}

  // inflected<TAB>lemma per line; blank lines and '#' comments ignored.
  static LexicalMatcher from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open lemma dictionary '" + path + "'");
    std::map<std::string, std::string, std::less<>> dict;
    IstreamLines lines(in);
    std::string line;
    std::size_t lineno = 0;
    while (lines.next(line)) {
      ++lineno;
      if (line.empty() || line.front() == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
        throw Error(Errc::validation, path + ":" + std::to_string(lineno) + ": expected inflected<TAB>lemma");
      }
      dict[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return LexicalMatcher(std::move(dict));
  }

  bool matches(std::string_view lemma, std::string_view token) const {
    if (token == lemma) return true;
    if (const auto it = dictionary_.find(token); it != dictionary_.end()) return it->second == lemma;
    return concord::matches(lemma, token);
  }

  std::optional<std::size_t> match_position(const ConceptId& lemma, const TokenizedSentence& sent) const {
    for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
      if (matches(lemma.str(), sent.tokens[i])) return i;
    }
    return std::nullopt;
  }

  std::size_t dictionary_size() const noexcept { return dictionary_.size(); }

 private:
  std::map<std::string, std::string, std::less<>> dictionary_;
};

inline std::optional<std::size_t> match_position(const ConceptId& lemma, const TokenizedSentence& sent) {
  return LexicalMatcher{}.match_position(lemma, sent);
}

}  // namespace concord
