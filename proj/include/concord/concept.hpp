#pragma once

#include <compare>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

#include "concord/error.hpp"

namespace concord {

// A single-token English lemma: lowercase ASCII letters with optional
// internal hyphens.
class ConceptId {
 public:
  static bool valid(std::string_view s) noexcept {
    if (s.empty() || s.front() == '-' || s.back() == '-') return false;
    for (char c : s) {
      if (!((c >= 'a' && c <= 'z') || c == '-')) return false;
    }
    return true;
  }

  static std::optional<ConceptId> parse(std::string_view s) {
    if (!valid(s)) return std::nullopt;
    return ConceptId(std::string(s), Unchecked{});
  }

  explicit ConceptId(std::string label) : label_(std::move(label)) {
    if (!valid(label_)) throw Error(Errc::invalid_input, "not a valid concept label: '" + label_ + "'");
  }

  const std::string& str() const noexcept { return label_; }

  friend bool operator==(const ConceptId&, const ConceptId&) = default;
  friend auto operator<=>(const ConceptId& a, const ConceptId& b) { return a.label_ <=> b.label_; }
  friend std::ostream& operator<<(std::ostream& os, const ConceptId& c) { return os << c.label_; }

 private:
  struct Unchecked {};
  ConceptId(std::string label, Unchecked) : label_(std::move(label)) {}

  std::string label_;
};

using ConceptPair = std::pair<ConceptId, ConceptId>;

}  // namespace concord

template <>
struct std::hash<concord::ConceptId> {
  std::size_t operator()(const concord::ConceptId& c) const noexcept { return std::hash<std::string>{}(c.str()); }
};
