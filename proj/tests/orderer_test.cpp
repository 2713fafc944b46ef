#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "concord/orderer.hpp"

using namespace concord;

namespace {

ConceptId C(const char* s) { return ConceptId(s); }

std::vector<ConceptId> Cs(std::initializer_list<const char*> xs) {
  std::vector<ConceptId> out;
  for (const auto* x : xs) out.emplace_back(x);
  return out;
}

std::vector<ConceptId> random_set(std::mt19937_64& rng, std::size_t m) {
  static const auto pool = Cs({"apple", "ball", "cat", "dog", "egg", "fish", "goat", "hat", "ice", "jam", "kite", "lamp"});
  std::vector<ConceptId> s = pool;
  std::shuffle(s.begin(), s.end(), rng);
  s.erase(s.begin() + static_cast<std::ptrdiff_t>(m), s.end());
  return s;
}

TransitionTable random_table(std::mt19937_64& rng, std::span<const ConceptId> set) {
  TransitionTable t;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      if (rng() % 5) t.set_pair(set[i], set[j], u(rng), 1);
    }
  }
  return t;
}

// Independent oracle: next_permutation from the sorted set, product of
// probabilities, first maximum wins.
std::vector<ConceptId> brute_force(const TransitionTable& t, std::span<const ConceptId> set) {
  std::vector<ConceptId> perm(set.begin(), set.end());
  std::sort(perm.begin(), perm.end());
  std::vector<ConceptId> best;
  double best_score = -1.0;
  do {
    double s = 1.0;
    for (std::size_t k = 1; k < perm.size(); ++k) s *= t.transition_prob(perm[k - 1], perm[k]);
    if (s > best_score * (1 + 1e-9)) {
      best_score = s;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST(OrderOriginal, Identity) {
  const auto s = Cs({"ball", "batter", "pitcher", "throw"});
  EXPECT_EQ(order_original(s).concepts, s);
  EXPECT_EQ(order_original(Cs({"a", "b"})).concepts, Cs({"a", "b"}));
  try {
    order_original(Cs({"a", "a", "b"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_set);
  }
}

TEST(OrderRandom, DeterministicAndPermutation) {
  const auto s = Cs({"a", "b", "c", "d", "e"});
  EXPECT_EQ(order_random(s, 17).concepts, order_random(s, 17).concepts);
  EXPECT_TRUE(std::is_permutation(s.begin(), s.end(), order_random(s, 17).concepts.begin()));
  EXPECT_EQ(order_random(Cs({"solo"}), 3).concepts, Cs({"solo"}));
  EXPECT_EQ(order_random(s, 3).strategy, Strategy::Random);
  EXPECT_FALSE(order_random(s, 3).score);
}

TEST(OrderRandom, UniformOverPermutations) {
  const auto s = Cs({"a", "b", "c", "d", "e"});
  constexpr int kSeeds = 10000;
  std::map<std::vector<ConceptId>, int> freq;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) ++freq[order_random(s, seed).concepts];
  EXPECT_EQ(freq.size(), 120u);
  const double p = 1.0 / 120.0, mean = kSeeds * p, sigma = std::sqrt(kSeeds * p * (1 - p));
  double chi2 = 0.0;
  int outside = 0;
  for (const auto& [perm, n] : freq) {
    chi2 += (n - mean) * (n - mean) / mean;
    if (std::abs(n - mean) > 3 * sigma) ++outside;
  }
  // 119 degrees of freedom: the 0.999 quantile is about 174.
  EXPECT_LT(chi2, 174.0);
  // 3-sigma per cell; expected ~0.3 excursions over 120 cells.
  EXPECT_LE(outside, 2);
}

TEST(OrderProbabilistic, HandExample) {
  TransitionTable t;
  t.set_pair(C("a"), C("b"), 0.9, 1);
  t.set_pair(C("b"), C("c"), 0.8, 1);
  t.set_pair(C("a"), C("c"), 0.7, 1);
  const auto o = order_probabilistic(t, Cs({"c", "a", "b"}));
  EXPECT_EQ(o.concepts, Cs({"a", "b", "c"}));
  ASSERT_TRUE(o.score);
  EXPECT_NEAR(*o.score, std::log(0.72), 1e-12);
  EXPECT_EQ(o.strategy, Strategy::Probabilistic);
}

TEST(OrderProbabilistic, UniformTieGoesToLexicographicFirst) {
  const TransitionTable t;
  EXPECT_EQ(order_probabilistic(t, Cs({"z", "y", "x"})).concepts, Cs({"x", "y", "z"}));
}

TEST(OrderProbabilistic, SizeBounds) {
  const TransitionTable t;
  try {
    order_probabilistic(t, Cs({"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::set_too_large);
  }
  EXPECT_THROW(order_probabilistic(t, Cs({"a"})), Error);
  EXPECT_EQ(order_probabilistic(t, Cs({"j", "i", "h", "g", "f", "e", "d", "c", "b", "a"})).concepts.front(), C("a"));
}

TEST(OrderProbabilistic, MatchesBruteForce) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 400; ++trial) {
    const auto set = random_set(rng, 2 + trial % 4);
    const auto t = random_table(rng, set);
    EXPECT_EQ(order_probabilistic(t, set).concepts, brute_force(t, set));
  }
}

TEST(OrderProbabilistic, BruteForceWithTiesOnDiscreteTables) {
  std::mt19937_64 rng(32);
  const double levels[] = {0.5, 0.75, 1.0, 0.9};
  for (int trial = 0; trial < 300; ++trial) {
    const auto set = random_set(rng, 3 + trial % 3);
    TransitionTable t;
    for (std::size_t i = 0; i < set.size(); ++i) {
      for (std::size_t j = i + 1; j < set.size(); ++j) {
        if (rng() % 2) t.set_pair(set[i], set[j], levels[rng() % 4], 1);
      }
    }
    EXPECT_EQ(order_probabilistic(t, set).concepts, brute_force(t, set));
  }
}

TEST(OrderProbabilistic, DominatesRandomPermutations) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    auto set = random_set(rng, 5);
    const auto t = random_table(rng, set);
    const double best = *order_probabilistic(t, set).score;
    for (int k = 0; k < 1000; ++k) {
      std::shuffle(set.begin(), set.end(), rng);
      EXPECT_GE(best, sequence_log_prob(t, set) - 1e-12);
    }
  }
}

TEST(OrderProbabilistic, ReversedTableGivesReversedArgmax) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 200; ++trial) {
    const auto set = random_set(rng, 5);
    TransitionTable t;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
      for (std::size_t j = i + 1; j < set.size(); ++j) t.set_pair(set[i], set[j], u(rng), 1);
    }
    auto fwd = order_probabilistic(t, set).concepts;
    std::reverse(fwd.begin(), fwd.end());
    EXPECT_EQ(order_probabilistic(t.reversed(), set).concepts, fwd);
  }
}

TEST(OrderExample, PitcherSentence) {
  const auto o = order_example("The pitcher throws the ball, and the batter hits a home run!",
                               Cs({"ball", "batter", "pitcher", "throw"}));
  EXPECT_EQ(o.concepts, Cs({"pitcher", "throw", "ball", "batter"}));
  EXPECT_TRUE(o.flags.empty());
}

TEST(OrderExample, DaddySentence) {
  const auto o = order_example("Daddy and daughter throwing rocks into stream",
                               Cs({"throw", "daughter", "stream", "rock", "daddy"}));
  EXPECT_EQ(o.concepts, Cs({"daddy", "daughter", "throw", "rock", "stream"}));
}

TEST(OrderExample, NoMatchesKeepsInputOrderWithFlags) {
  const auto o = order_example("Nothing relevant here.", Cs({"ski", "mountain"}));
  EXPECT_EQ(o.concepts, Cs({"ski", "mountain"}));
  EXPECT_EQ(o.flags, (std::vector<std::string>{"concept-not-found-in-reference:ski",
                                               "concept-not-found-in-reference:mountain"}));
}

TEST(OrderExample, PartialMatchAppendsMissingAtTail) {
  const auto o = order_example("A dog is throwing a frisbee.", Cs({"catch", "frisbee", "dog", "throw"}));
  EXPECT_EQ(o.concepts, Cs({"dog", "throw", "frisbee", "catch"}));
  EXPECT_EQ(o.flags.size(), 1u);
}

TEST(FormatInput, Goldens) {
  const auto unordered = Cs({"ski", "mountain", "skier"});
  Ordering o{Cs({"skier", "ski", "mountain"}), Strategy::Example, std::nullopt, {}};
  EXPECT_EQ(format_input(unordered, o, InputFormat::SpaceDelimited), "skier ski mountain");
  EXPECT_EQ(format_input(unordered, o, InputFormat::CommaDelimited), "skier, ski, mountain");
  EXPECT_EQ(format_input(unordered, o, InputFormat::OrderingToken),
            "ski mountain skier [ORDERING] skier ski mountain [ORDERING]");
}

TEST(FormatInput, RejectsNonPermutation) {
  Ordering o{Cs({"skier", "ski"}), Strategy::Original, std::nullopt, {}};
  try {
    format_input(Cs({"ski", "mountain", "skier"}), o, InputFormat::SpaceDelimited);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_ordering);
  }
}

TEST(FormatInput, RoundTripsThroughParser) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 300; ++trial) {
    const auto set = random_set(rng, 1 + trial % 6);
    const auto o = order_random(set, rng());
    for (auto fmt : {InputFormat::SpaceDelimited, InputFormat::CommaDelimited, InputFormat::OrderingToken}) {
      const auto text = format_input(set, o, fmt);
      const auto back = parse_input(text, fmt);
      EXPECT_EQ(back.ordered, o.concepts) << text;
      if (fmt == InputFormat::OrderingToken) {
        EXPECT_EQ(back.unordered, set);
      }
    }
  }
}

TEST(Strategy, NamesRoundTrip) {
  for (auto s : {Strategy::Original, Strategy::Random, Strategy::Probabilistic, Strategy::Example}) {
    EXPECT_EQ(parse_strategy(strategy_name(s)), s);
  }
  EXPECT_FALSE(parse_strategy("greedy"));
  EXPECT_EQ(parse_format("token"), InputFormat::OrderingToken);
}
