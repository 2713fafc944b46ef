#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "concord/concept_graph.hpp"

using namespace concord;

namespace {

const std::string kFixture = std::string(CONCORD_TEST_DATA) + "/fixture_dump.tsv";

ConceptGraph from_text(const std::string& text, const RelationFilter& filter = {}) {
  std::istringstream in(text);
  return load_graph(IstreamLines(in), filter, "inline");
}

std::vector<std::string> labels(const std::vector<ConceptId>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.str());
  return out;
}

}  // namespace

TEST(NormalizeConcept, EnglishTermFromUri) {
  EXPECT_EQ(normalize_concept("/c/en/throw")->str(), "throw");
  EXPECT_EQ(normalize_concept("/c/en/throw/v/wn/contact")->str(), "throw");
  EXPECT_EQ(normalize_concept("/c/en/Dog")->str(), "dog");
  EXPECT_EQ(normalize_concept("ski")->str(), "ski");
}

TEST(NormalizeConcept, RejectsForeignMultiwordAndEmpty) {
  EXPECT_FALSE(normalize_concept("/c/fr/jeter"));
  EXPECT_FALSE(normalize_concept("/c/en/home_run"));
  EXPECT_FALSE(normalize_concept("/c/en/"));
  EXPECT_FALSE(normalize_concept("/c/en"));
  EXPECT_FALSE(normalize_concept(""));
  EXPECT_FALSE(normalize_concept("/c/en/3d"));
  EXPECT_FALSE(normalize_concept("/r/IsA"));
}

TEST(LoadGraph, ThreeRowExample) {
  const auto g = from_text(
      "RelatedTo\t/c/en/dog\t/c/en/frisbee\n"
      "IsA\t/c/en/dog\t/c/en/animal\n"
      "RelatedTo\t/c/en/chien\t/c/fr/os\n");
  EXPECT_EQ(g.vertex_count(), 3u);
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(labels(neighbors(g, ConceptId("dog"))), (std::vector<std::string>{"animal", "frisbee"}));
  EXPECT_TRUE(neighbors(g, ConceptId("cat")).empty());
  EXPECT_EQ(g.summary().rows_concept_filtered, 1u);
}

TEST(LoadGraph, DuplicateInEitherDirectionIsOneEdge) {
  const auto g = from_text("RelatedTo\t/c/en/a\t/c/en/b\nRelatedTo\t/c/en/b\t/c/en/a\n");
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(labels(neighbors(g, ConceptId("b"))), (std::vector<std::string>{"a"}));
  EXPECT_EQ(labels(neighbors(g, ConceptId("a"))), (std::vector<std::string>{"b"}));
}

TEST(LoadGraph, EmptyStreamIsAnError) {
  try {
    from_text("");
    FAIL() << "expected empty-graph error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_graph);
  }
}

TEST(LoadGraph, UnreadableFileIsIoError) {
  try {
    load_graph_file("/nonexistent/dump.tsv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io);
  }
}

TEST(LoadGraph, FixtureSummary) {
  const auto g = load_graph_file(kFixture);
  const auto& s = g.summary();
  EXPECT_EQ(s.rows_read, 20u);
  EXPECT_EQ(s.rows_skipped, 2u);
  EXPECT_EQ(s.rows_concept_filtered, 3u);
  EXPECT_EQ(s.rows_relation_filtered, 0u);
  EXPECT_EQ(s.vertices, 20u);
  EXPECT_EQ(s.edges, 14u);
  EXPECT_EQ(labels(neighbors(g, ConceptId("ball"))), (std::vector<std::string>{"batter", "field", "throw"}));
  EXPECT_EQ(labels(neighbors(g, ConceptId("animal"))), (std::vector<std::string>{"cat", "dog"}));
}

TEST(LoadGraph, DenyListDropsRelation) {
  RelationFilter f;
  f.deny.insert("Antonym");
  const auto g = load_graph_file(kFixture, f);
  EXPECT_EQ(g.summary().rows_relation_filtered, 2u);
  EXPECT_EQ(g.edge_count(), 12u);
  EXPECT_EQ(g.vertex_count(), 17u);
  EXPECT_FALSE(g.find(ConceptId("catch")));
}

TEST(LoadGraph, AllowListKeepsOnlyListed) {
  RelationFilter f;
  f.allow.insert("IsA");
  const auto g = load_graph_file(kFixture, f);
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(labels(neighbors(g, ConceptId("animal"))), (std::vector<std::string>{"cat", "dog"}));
}

TEST(LoadGraph, GzipMatchesPlain) {
  auto plain = load_graph_file(kFixture);
  auto gz = load_graph_file(kFixture + ".gz");
  EXPECT_EQ(labels(neighbors(plain, ConceptId("ball"))), labels(neighbors(gz, ConceptId("ball"))));
  EXPECT_EQ(gz.edge_count(), plain.edge_count());
  EXPECT_EQ(gz.summary().rows_skipped, plain.summary().rows_skipped);
}

TEST(LoadGraph, LoadingTwiceIsIdentical) {
  EXPECT_EQ(load_graph_file(kFixture), load_graph_file(kFixture));
  EXPECT_EQ(load_graph_file(kFixture).summary().to_json().dump(), load_graph_file(kFixture).summary().to_json().dump());
}

TEST(Snapshot, RoundTrip) {
  const auto g = load_graph_file(kFixture);
  const auto path = (std::filesystem::temp_directory_path() / "concord_snapshot_test.bin").string();
  g.save_snapshot(path);
  EXPECT_TRUE(is_graph_snapshot(path));
  EXPECT_FALSE(is_graph_snapshot(kFixture));
  const auto back = ConceptGraph::load_snapshot(path);
  EXPECT_EQ(back, g);
  EXPECT_EQ(open_graph(path), g);
  std::filesystem::remove(path);
}

TEST(Snapshot, RejectsNonSnapshot) {
  try {
    ConceptGraph::load_snapshot(kFixture);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io);
  }
}

// Random dump slices: mixed languages, multiword terms, case, junk rows.
TEST(LoadGraphProperty, InvariantsOnRandomDumps) {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> langs = {"en", "en", "en", "fr", "de"};
  const std::vector<std::string> terms = {"dog", "Cat", "ball", "home_run", "ski", "sk-i", "a", "b", "c", "d", "e",
                                          "zap", "x_y", "r2d2", "well-known", "-bad", "throw"};
  const std::vector<std::string> rels = {"RelatedTo", "IsA", "Antonym", "UsedFor"};
  for (int trial = 0; trial < 50; ++trial) {
    std::ostringstream dump;
    const int rows = 5 + static_cast<int>(rng() % 60);
    for (int r = 0; r < rows; ++r) {
      if (rng() % 10 == 0) {
        dump << "junk\n";
        continue;
      }
      auto node = [&] { return "/c/" + langs[rng() % langs.size()] + "/" + terms[rng() % terms.size()]; };
      dump << "/a/x\t/r/" << rels[rng() % rels.size()] << '\t' << node() << '\t' << node() << "\t{}\n";
    }
    ConceptGraph g;
    try {
      g = from_text(dump.str());
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), Errc::empty_graph);
      continue;
    }
    EXPECT_EQ(g, from_text(dump.str()));
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      const auto& label = g.label(v).str();
      EXPECT_TRUE(ConceptId::valid(label)) << label;
      EXPECT_EQ(label.find_first_of(" /#_"), std::string::npos);
      const auto adj = g.adjacent(v);
      for (std::size_t k = 0; k < adj.size(); ++k) {
        EXPECT_LT(adj[k], g.vertex_count());
        EXPECT_NE(adj[k], v);
        if (k) {
          EXPECT_LT(adj[k - 1], adj[k]);  // sorted, no duplicates
        }
        const auto back = g.adjacent(adj[k]);
        EXPECT_TRUE(std::binary_search(back.begin(), back.end(), v));
      }
    }
  }
}
