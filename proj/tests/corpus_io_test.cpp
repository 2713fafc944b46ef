#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "concord/corpus_io.hpp"

using namespace concord;

namespace {

const std::string kData = CONCORD_TEST_DATA;

std::vector<ConceptId> Cs(std::initializer_list<const char*> xs) {
  std::vector<ConceptId> out;
  for (const auto* x : xs) out.emplace_back(x);
  return out;
}

LoadedInstances parse_text(const std::string& text, bool lenient = false) {
  std::istringstream in(text);
  return parse_instances(IstreamLines(in), "inline", lenient);
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::usage;
}

}  // namespace

TEST(ParseInstances, PaperExampleLine) {
  const auto got = parse_text(
      R"({"concepts":["dog","throw","frisbee","catch"],"references":["A man throws away his dog's favorite frisbee expecting him to catch it in the air."]})");
  ASSERT_EQ(got.instances.size(), 1u);
  const auto& inst = got.instances[0];
  EXPECT_EQ(inst.concepts, Cs({"dog", "throw", "frisbee", "catch"}));
  EXPECT_EQ(inst.references.size(), 1u);
  EXPECT_EQ(inst.id, concept_set_id(inst.concepts));
  EXPECT_EQ(inst.id.rfind("cs-", 0), 0u);
}

TEST(ParseInstances, IdIgnoresConceptOrder) {
  EXPECT_EQ(concept_set_id(Cs({"a", "b", "c"})), concept_set_id(Cs({"c", "a", "b"})));
  EXPECT_NE(concept_set_id(Cs({"a", "b", "c"})), concept_set_id(Cs({"a", "bc"})));
}

TEST(LoadInstances, FixtureFile) {
  const auto got = load_instances(kData + "/instances.jsonl");
  ASSERT_EQ(got.instances.size(), 4u);
  EXPECT_EQ(got.instances[0].id, "frisbee");
  EXPECT_EQ(got.instances[3].references.size(), 2u);
  EXPECT_TRUE(got.problems.empty());
}

TEST(LoadInstances, DuplicateConceptNamesTheLine) {
  try {
    load_instances(kData + "/bad_duplicate.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::validation);
    EXPECT_NE(std::string(e.what()).find("bad_duplicate.jsonl:2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("duplicate concept 'dog'"), std::string::npos) << e.what();
  }
}

TEST(LoadInstances, LenientSkipsAndReports) {
  const auto got = load_instances(kData + "/bad_duplicate.jsonl", true);
  EXPECT_EQ(got.instances.size(), 2u);
  ASSERT_EQ(got.problems.size(), 1u);
  EXPECT_EQ(got.problems[0].line, 2u);
}

TEST(LoadInstances, Errors) {
  EXPECT_EQ(code_of([] { parse_text(""); }), Errc::zero_instances);
  EXPECT_EQ(code_of([] { parse_text("\n  \n"); }), Errc::zero_instances);
  EXPECT_EQ(code_of([] { parse_text("{not json", true); }), Errc::zero_instances);
  EXPECT_EQ(code_of([] { load_instances("/nonexistent/x.jsonl"); }), Errc::io);
  EXPECT_EQ(code_of([] { parse_text(R"({"concepts":["a"],"references":["x"]})"); }), Errc::validation);
  EXPECT_EQ(code_of([] { parse_text(R"({"concepts":["a","b"],"references":[]})"); }), Errc::validation);
  EXPECT_EQ(code_of([] { parse_text(R"({"concepts":["a","b"],"references":["  "]})"); }), Errc::validation);
  EXPECT_EQ(code_of([] { parse_text(R"({"concepts":["a","B c"],"references":["x"]})"); }), Errc::validation);
  EXPECT_EQ(code_of([] { parse_text(R"({"concepts":["a","b","c","d","e","f","g","h","i","j","k"],"references":["x"]})"); }),
            Errc::validation);
  EXPECT_EQ(code_of([] { parse_text(R"({"concepts":["a","b"]})"); }), Errc::validation);
}

TEST(WriteInstances, RoundTripAndDeterministic) {
  const auto got = load_instances(kData + "/instances.jsonl");
  std::ostringstream a, b;
  write_instances(a, got.instances);
  write_instances(b, got.instances);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(parse_text(a.str()).instances, got.instances);
  EXPECT_EQ(a.str().substr(0, 22), R"({"id":"frisbee","conce)");
}

TEST(ImportCommonGen, RowPerSentenceGroupsBySet) {
  const auto r = import_commongen(kData + "/commongen_dev.jsonl", Split::Dev);
  EXPECT_EQ(r.stats.layout, "jsonl:concepts+target");
  EXPECT_EQ(r.stats.source_rows, 10u);
  EXPECT_EQ(r.stats.rows_rejected, 1u);  // "hot dog"
  ASSERT_EQ(r.instances.size(), 4u);
  EXPECT_EQ(r.stats.references, 8u);
  EXPECT_EQ(r.stats.published_sets, 993u);
  EXPECT_EQ(r.instances[0].concepts, Cs({"field", "look", "stand"}));
  EXPECT_EQ(r.instances[0].references.size(), 3u);
  EXPECT_EQ(r.instances[2].concepts, Cs({"ski", "mountain", "skier"}));  // first-seen order
  EXPECT_EQ(r.instances[2].references.size(), 2u);
  EXPECT_EQ(r.instances[3].concepts, Cs({"dog", "frisbee", "catch", "throw"}));
  EXPECT_EQ(r.instances[3].references.size(), 1u);  // blank target dropped
  for (const auto& inst : r.instances) EXPECT_EQ(inst.id, concept_set_id(inst.concepts));
}

TEST(ImportCommonGen, OfficialLayout) {
  const auto r = import_commongen(kData + "/official_dev.jsonl", Split::Dev);
  EXPECT_EQ(r.stats.layout, "jsonl:concept_set+scene");
  ASSERT_EQ(r.instances.size(), 2u);
  EXPECT_EQ(r.instances[0].concepts, Cs({"mountain", "ski", "skier"}));
  EXPECT_EQ(r.instances[0].references.size(), 2u);
}

TEST(ImportCommonGen, TextLayout) {
  const auto r = import_commongen(kData + "/commongen.dev.src_alpha.txt", Split::Dev);
  EXPECT_EQ(r.stats.layout, "text:src_alpha+tgt");
  ASSERT_EQ(r.instances.size(), 2u);
  EXPECT_EQ(r.instances[0].references.size(), 2u);
}

TEST(ImportCommonGen, UnknownLayoutListsFields) {
  try {
    import_commongen(kData + "/unknown_layout.jsonl", Split::Test);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::adapter);
    EXPECT_NE(std::string(e.what()).find("[completion, prompt]"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { import_commongen(kData + "/fixture_dump.tsv", Split::Test); }), Errc::adapter);
}

TEST(ImportCommonGen, OutputLoadsBack) {
  const auto r = import_commongen(kData + "/commongen_dev.jsonl", Split::Dev);
  std::ostringstream out;
  write_instances(out, r.instances);
  EXPECT_EQ(parse_text(out.str()).instances, r.instances);
}

TEST(Split, Names) {
  EXPECT_EQ(parse_split("validation"), Split::Dev);
  EXPECT_EQ(parse_split("test"), Split::Test);
  EXPECT_FALSE(parse_split("holdout"));
  EXPECT_EQ(published_set_count(Split::Test), 1497u);
}
