#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <map>
#include <set>
#include <string>

#include <fmt/format.h>

#include "geoloc/clues/clue_corpus.hpp"
#include "geoloc/clues/taggers.hpp"
#include "geoloc/eval/gazetteer.hpp"
#include "geoloc/gateway/mock_server.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace geoloc;
using namespace geoloc::clues;
using util::Json;

namespace {

const char* kChile = "houses in central Chile are more likely to have terracotta tiled roofs";

ClueRecord clue(std::string id, std::string text, std::string country) {
  ClueRecord r;
  r.id = std::move(id);
  r.text = std::move(text);
  r.image_ref = "img/" + r.id + ".jpg";
  r.country = std::move(country);
  return r;
}

const eval::Gazetteer& gazetteer() {
  static const eval::Gazetteer g = eval::Gazetteer::load_csv(testing_support::data_dir() / "gazetteer.csv");
  return g;
}

// Fails the first `failures` calls, then answers from the inner tagger.
class FlakyTagger : public Tagger {
 public:
  FlakyTagger(Tagger& inner, int failures) : inner_(inner), left_(failures) {}
  std::vector<std::string> tag(const std::string& text) override {
    if (left_.fetch_sub(1) > 0) throw TaggerUnavailable("down");
    return inner_.tag(text);
  }
 private:
  Tagger& inner_;
  std::atomic<int> left_;
};

}  // namespace

TEST_SUITE("clues") {

TEST_CASE("ingest") {
  SUBCASE("one valid line") {
    auto r = ingest_clues_text(R"({"text": "t", "image_ref": "i", "country": "Chile"})");
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].id == "clue-1");
  }
  SUBCASE("duplicate lines collapse") {
    const std::string line = R"({"text": "t", "image_ref": "i", "country": "Chile"})";
    auto r = ingest_clues_text(line + "\n" + line + "\n");
    CHECK(r.records.size() == 1);
    CHECK(r.duplicates == 1);
  }
  SUBCASE("10-line fixture with two defects") {
    auto r = ingest_clues(testing_support::fixture("clues_10.jsonl"));
    CHECK(r.records.size() == 8);
    REQUIRE(r.rejections.size() == 2);
    CHECK(r.rejections[0].line == 4);
    CHECK(r.rejections[0].reason == "malformed JSON");
    CHECK(r.rejections[1].line == 8);
    CHECK(r.rejections[1].reason.find("country") != std::string::npos);
  }
  SUBCASE("repeated id with different content is rejected") {
    auto r = ingest_clues_text(
        "{\"id\": \"x\", \"text\": \"a\", \"image_ref\": \"i\", \"country\": \"C\"}\n"
        "{\"id\": \"x\", \"text\": \"b\", \"image_ref\": \"i\", \"country\": \"C\"}\n");
    CHECK(r.records.size() == 1);
    CHECK(r.rejections.size() == 1);
  }
  SUBCASE("JSONL round trip") {
    auto r = ingest_clues(testing_support::fixture("clues_10.jsonl"));
    auto again = ingest_clues_text(clues_to_jsonl(r.records));
    CHECK(clues_to_jsonl(again.records) == clues_to_jsonl(r.records));
  }
}

TEST_CASE("gazetteer tagger") {
  GazetteerTagger tagger(gazetteer());
  auto chile = tagger.tag(kChile);
  CHECK(chile == std::vector<std::string>{"Chile"});
  CHECK(tagger.tag("the sky is blue").empty());
  CHECK(tagger.tag("Parisian cafés").empty());
  CHECK(tagger.tag("Near New York, not York").front() == "New York");

  SUBCASE("20-clue fixture partition matches the word-boundary oracle") {
    auto records = ingest_clues(testing_support::fixture("clues_20.jsonl")).records;
    REQUIRE(records.size() == 20);
    const auto names = gazetteer().place_names();
    auto result = filter_geo_entities(records, tagger);
    std::set<std::string> kept;
    for (const auto& r : result.kept) kept.insert(r.id);
    std::size_t oracle_kept = 0;
    for (const auto& r : records) {
      const bool expect = oracle::mentions_any(r.text, names);
      oracle_kept += expect;
      CHECK_MESSAGE(kept.count(r.id) == static_cast<std::size_t>(expect), r.id);
    }
    CHECK(result.kept.size() == oracle_kept);
    CHECK(result.kept.size() + result.dropped.size() == records.size());
    for (const auto& c : result.drop_causes) CHECK(c.reason == kCauseNoEntity);
  }
}

TEST_CASE("filtering with an unreliable tagger") {
  GazetteerTagger inner(std::vector<std::string>{"Chile"});
  std::vector<ClueRecord> recs{clue("a", kChile, "Chile")};
  SUBCASE("recovers within the retry budget") {
    FlakyTagger flaky(inner, 2);
    auto r = filter_geo_entities(recs, flaky, 2);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0].entities == std::vector<std::string>{"Chile"});
  }
  SUBCASE("routes to dropped after retries") {
    FlakyTagger flaky(inner, 3);
    auto r = filter_geo_entities(recs, flaky, 2);
    REQUIRE(r.dropped.size() == 1);
    CHECK(r.drop_causes[0].reason == kCauseTaggerUnavailable);
  }
  SUBCASE("parallel tagging keeps input order") {
    std::vector<ClueRecord> many;
    for (int i = 0; i < 40; ++i) many.push_back(clue(fmt::format("c{:02}", i), i % 2 ? kChile : "nothing", "Chile"));
    auto r = filter_geo_entities(many, inner, 0, 4);
    REQUIRE(r.kept.size() == 20);
    for (std::size_t k = 1; k < r.kept.size(); ++k) CHECK(r.kept[k - 1].id < r.kept[k].id);
  }
}

TEST_CASE("endpoint tagger") {
  gateway::MockEndpoint mock(Json{{"entities", Json{{"places", {"Chile", "Tokyo"}}}}});
  mock.start();
  gateway::EndpointConfig cfg;
  cfg.base_url = mock.base_url();
  cfg.max_retries = 0;
  EndpointTagger tagger(cfg);
  CHECK(tagger.tag(kChile) == std::vector<std::string>{"Chile"});
  CHECK(tagger.tag("the sky is blue").empty());
  mock.stop();
  CHECK_THROWS_AS(tagger.tag(kChile), TaggerUnavailable);
}

TEST_CASE("stage-1 export") {
  auto one = export_reasoning_corpus({clue("a", kChile, "Chile")});
  REQUIRE(one.examples.size() == 1);
  const Json j = example_to_json(one.examples[0]);
  CHECK(j["answer"]["country"] == "Chile");
  CHECK(j["answer"]["reasons"] == kChile);
  CHECK_FALSE(j["answer"].contains("city"));
  CHECK(examples_to_jsonl(export_reasoning_corpus({}).examples).empty());

  SUBCASE("5-record golden file") {
    std::vector<ClueRecord> recs{
        clue("g1", kChile, "Chile"),
        clue("g2", "Left-hand traffic and kanji shop signs", "Japan"),
        clue("g3", "Bollards with a red band, \"typical\" of France", "France"),
        clue("g4", "Yellow-backed road signs", ""),
        clue("g5", "Cyrillic lettering on blue street plates", "Russia")};
    auto r = export_reasoning_corpus(recs);
    CHECK(r.examples.size() == 4);
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0].id == "g4");
    const auto path = std::filesystem::path(GEOLOC_TEST_DIR) / "golden" / "stage1_5.jsonl";
    if (std::getenv("GEOLOC_WRITE_GOLDEN")) util::write_text_file(path, examples_to_jsonl(r.examples));
    CHECK(examples_to_jsonl(r.examples) == util::read_text_file(path));
  }
}

TEST_CASE("stage-2 export") {
  auto r = export_location_corpus({{"img1", "img1", "Singapore", std::string("Singapore")},
                                   {"img2", "img2", "Chile", std::nullopt}});
  REQUIRE(r.examples.size() == 1);
  const Json j = example_to_json(r.examples[0]);
  CHECK(j["answer"]["country"] == "Singapore");
  CHECK(j["answer"]["city"] == "Singapore");
  CHECK_FALSE(j["answer"].contains("reasons"));
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].reason == "missing city");

  SUBCASE("70 records against a join oracle") {
    std::vector<loc::LocatabilityScore> high;
    std::vector<CuratedImage> tags;
    for (int i = 0; i < 70; ++i) {
      const std::string id = fmt::format("h{:02}", i);
      high.push_back({id, 0.5});
      if (i % 10 == 9) continue;  // 7 untagged
      CuratedImage c{id, "ref/" + id, i % 13 == 0 ? "" : "Japan", std::nullopt};
      if (i % 6 != 0) c.city = "Tokyo";
      tags.push_back(c);
    }
    std::size_t untagged = 0, no_country = 0, no_city = 0, ok = 0;
    std::map<std::string, const CuratedImage*> by_id;
    for (const auto& t : tags) by_id[t.image_id] = &t;
    for (const auto& h : high) {
      auto it = by_id.find(h.image_id);
      if (it == by_id.end()) ++untagged;
      else if (it->second->country.empty()) ++no_country;
      else if (!it->second->city) ++no_city;
      else ++ok;
    }
    auto joined = join_high_with_geotags(high, tags);
    CHECK(joined.unmatched.size() == untagged);
    auto out = export_location_corpus(joined.images);
    CHECK(out.examples.size() == ok);
    CHECK(out.skipped.size() == no_country + no_city);
    CHECK(out.examples.size() + out.skipped.size() + joined.unmatched.size() == 70);
  }
}

TEST_CASE("export totality and idempotence on the 25-record fixtures") {
  std::vector<ClueRecord> recs;
  util::for_each_jsonl(testing_support::fixture("corpus_25.jsonl"),
                       [&](std::size_t, const Json& j) { recs.push_back(clue_from_json(j)); });
  REQUIRE(recs.size() == 25);
  auto s1 = export_reasoning_corpus(recs);
  CHECK(s1.examples.size() + s1.skipped.size() == 25);
  CHECK(s1.skipped.size() == 5);
  CHECK(examples_to_jsonl(export_reasoning_corpus(recs).examples) == examples_to_jsonl(s1.examples));

  auto tags = load_geotags(testing_support::fixture("geotags_25.jsonl"));
  REQUIRE(tags.size() == 25);
  auto s2 = export_location_corpus(tags);
  CHECK(s2.examples.size() + s2.skipped.size() == 25);
  CHECK(s2.skipped.size() == 5);
}

}
