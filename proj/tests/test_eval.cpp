#include <doctest.h>

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/eval/experiment.hpp"
#include "geoloc/eval/gazetteer.hpp"
#include "geoloc/eval/metrics.hpp"
#include "geoloc/eval/place_names.hpp"
#include "geoloc/eval/report.hpp"
#include "geoloc/gateway/mock_server.hpp"
#include "geoloc/gateway/response_parser.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace geoloc;
using namespace geoloc::eval;
using gateway::PredictionRecord;

namespace {

const AliasTable& shipped_aliases() {
  static const AliasTable t = AliasTable::load_csv(testing_support::data_dir() / "aliases.csv");
  return t;
}

const Gazetteer& shipped_gazetteer() {
  static const Gazetteer g =
      Gazetteer::load_csv(testing_support::data_dir() / "gazetteer.csv", &shipped_aliases());
  return g;
}

PredictionRecord answer(const std::string& id, const std::string& country, const std::string& city) {
  return gateway::make_prediction(id, fmt::format("{{'country': '{}', 'city': '{}'}}", country, city));
}

PredictionRecord refusal(const std::string& id) {
  return gateway::make_prediction(id, gateway::RefusalDetector::default_patterns()[0]);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("place-name normalization") {
  CHECK(normalize_place_name("  Singapore ") == "singapore");
  CHECK(normalize_place_name("São Paulo") == "sao paulo");
  CHECK(normalize_place_name("New   York\tCity") == "new york city");
  CHECK(normalize_place_name("USA", &shipped_aliases()) == "united states");
  CHECK(normalize_place_name("NYC", &shipped_aliases()) == "new york");
  for (const char* s : {"  Zürich ", "Córdoba", "ÅLESUND", "NYC", "Bombay"}) {
    const auto once = normalize_place_name(s, &shipped_aliases());
    CHECK(normalize_place_name(once, &shipped_aliases()) == once);
  }
  AliasTable t;
  t.add("a", "b");
  CHECK_THROWS_AS(t.add("b", "a"), ValidationError);
}

TEST_CASE("geocoding") {
  const auto& g = shipped_gazetteer();
  const auto paris = g.geocode_city("Paris", std::string_view("France"));
  REQUIRE(paris);
  CHECK(paris->lat == 48.8566);
  CHECK(paris->lon == 2.3522);
  const auto paris_us = g.geocode_city("paris", std::string_view("USA"));
  REQUIRE(paris_us);
  CHECK(paris_us->lat == 33.6609);
  // No hint: the more populous entry wins; a hint that matches nothing is ignored.
  CHECK(*g.geocode_city("Paris") == *paris);
  CHECK(*g.geocode_city("Paris", std::string_view("Narnia")) == *paris);
  const auto* nyc = g.lookup("NYC");
  REQUIRE(nyc);
  CHECK(nyc->city == "New York");
  CHECK_FALSE(g.geocode_city("Atlantis"));
  CHECK(g.geocode_city("Tokyo") == g.geocode_city("Tokyo"));
}

TEST_CASE("F1 identity") {
  CHECK(f1_score(0, 0) == 0.0);
  CHECK(f1_score(1, 1) == 1.0);
  CHECK(std::abs(f1_score(0.7943, 1.00) - 0.8854) <= 1e-4);
  CHECK(std::abs(f1_score(0.8917, 0.34) - 0.4923) <= 1e-4);
  const auto row = LevelMetrics::from_rates(0.5829, 0.95);
  CHECK(std::abs(row.f1 - 0.7225) <= 1e-4);
}

TEST_CASE("level metrics") {
  std::vector<GroundTruth> truth{{"a", "Japan", "Tokyo", {}},
                                 {"b", "France", "Paris", {}},
                                 {"c", "United States", "New York", {}},
                                 {"d", "Chile", "Santiago", {}}};
  SUBCASE("all correct") {
    std::vector<PredictionRecord> p{answer("a", "Japan", "Tokyo"), answer("b", "France", "Paris"),
                                    answer("c", "USA", "NYC"), answer("d", "Chile", "Santiago")};
    auto m = compute_level_metrics(p, truth, Level::kCity, &shipped_aliases());
    CHECK(*m.accuracy == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
  SUBCASE("mixed") {
    std::vector<PredictionRecord> p{answer("a", "Japan", "Osaka"), answer("b", "France", "Paris"),
                                    refusal("c"), answer("d", "Peru", "Lima")};
    auto country = compute_level_metrics(p, truth, Level::kCountry);
    CHECK(country.effective == 3);
    CHECK(country.correct == 2);
    CHECK(*country.accuracy == doctest::Approx(2.0 / 3));
    CHECK(country.recall == 0.75);
    auto city = compute_level_metrics(p, truth, Level::kCity);
    CHECK(*city.accuracy == doctest::Approx(1.0 / 3));
  }
  SUBCASE("nothing effective") {
    std::vector<PredictionRecord> p{refusal("a"), refusal("b"), refusal("c"), refusal("d")};
    auto m = compute_level_metrics(p, truth, Level::kCountry);
    CHECK_FALSE(m.accuracy);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
  }
  SUBCASE("missing prediction") {
    std::vector<PredictionRecord> p{answer("a", "Japan", "Tokyo")};
    CHECK_THROWS_AS(compute_level_metrics(p, truth, Level::kCountry), ValidationError);
  }
}

TEST_CASE("threshold accuracy") {
  // Four truth points offset from known gazetteer centers by the projection oracle.
  const auto& g = shipped_gazetteer();
  const std::vector<std::pair<std::string, std::string>> cities{
      {"Japan", "Tokyo"}, {"France", "Paris"}, {"Chile", "Santiago"}, {"Singapore", "Singapore"}};
  const double offsets[] = {0.5, 10.0, 300.0, 2000.0};
  std::vector<GroundTruth> truth;
  std::vector<PredictionRecord> preds;
  for (int i = 0; i < 4; ++i) {
    const auto c = *g.geocode_city(cities[i].second, std::string_view(cities[i].first));
    auto [lat, lon] = oracle::project(c.lat, c.lon, 37.0 * i, offsets[i]);
    const std::string id = fmt::format("t{}", i);
    truth.push_back({id, cities[i].first, cities[i].second, geo::LatLon{lat, lon}});
    preds.push_back(answer(id, cities[i].first, cities[i].second));
  }
  auto t = threshold_accuracy(preds, truth, g);
  CHECK(t.fractions == std::vector<double>{0.25, 0.50, 0.75});
  CHECK(t.total == 4);

  SUBCASE("exact point counts everywhere") {
    std::vector<GroundTruth> exact{{"x", "Japan", "Tokyo", *g.geocode_city("Tokyo")}};
    auto e = threshold_accuracy({answer("x", "Japan", "Tokyo")}, exact, g);
    CHECK(e.fractions == std::vector<double>{1.0, 1.0, 1.0});
  }
  SUBCASE("all refusals") {
    std::vector<PredictionRecord> r;
    for (const auto& tr : truth) r.push_back(refusal(tr.image_id));
    CHECK(threshold_accuracy(r, truth, g).fractions == std::vector<double>{0.0, 0.0, 0.0});
  }
  SUBCASE("unknown city misses and is counted") {
    auto p = preds;
    p[0] = answer("t0", "Japan", "Atlantis");
    auto u = threshold_accuracy(p, truth, g);
    CHECK(u.not_found == 1);
    CHECK(u.fractions[0] == 0.0);
  }
}

TEST_CASE("reports") {
  std::vector<GroundTruth> truth{{"a", "Japan", "Tokyo", {}}, {"b", "France", "Paris", {}}};
  auto rep = evaluate({answer("a", "Japan", "Tokyo"), refusal("b")}, truth, nullptr);
  CHECK(rep.counts.total == 2);
  CHECK(rep.counts.effective + rep.counts.failures() == rep.counts.total);
  CHECK(rep.counts.refusal == 1);
  CHECK_FALSE(rep.distance);
  auto back = report_from_json(report_to_json(rep));
  CHECK(report_to_json(back) == report_to_json(rep));
  CHECK(report_to_text(rep).find("country") != std::string::npos);
  CHECK(report_to_csv(rep).rfind("section,key,value\n", 0) == 0);
  CHECK_THROWS_AS(report_from_json(util::Json::object()), ValidationError);
}

TEST_CASE("ablation table") {
  auto run = [](double ca, double cr, double ya, double yr) {
    EvalReport r;
    r.country = LevelMetrics::from_rates(ca, cr);
    r.city = LevelMetrics::from_rates(ya, yr);
    return r;
  };
  SUBCASE("single run") {
    auto t = ablation_report({{"only", run(0.5, 1, 0.4, 1)}});
    CHECK(t.runs.size() == 1);
  }
  SUBCASE("identical runs tie everywhere") {
    auto t = ablation_report({{"a", run(0.5, 1, 0.4, 1)}, {"b", run(0.5, 1, 0.4, 1)}});
    for (const auto& row : t.best)
      for (bool b : row) CHECK(b);
  }
  SUBCASE("published ablation rows") {
    auto t = ablation_report({{"base", run(0.5829, 0.95, 0.3743, 0.89)},
                              {"no-location", run(0.6971, 1.00, 0.4114, 0.99)},
                              {"no-reasoning", run(0.7803, 1.00, 0.7029, 1.00)},
                              {"full", run(0.8237, 1.00, 0.7521, 1.00)}});
    const double f1[] = {0.7225, 0.8215, 0.8766, 0.9033};
    for (int r = 0; r < 4; ++r) CHECK(std::abs(*t.values[r][2] - f1[r]) <= 1e-4);
    CHECK(t.best[3][2]);
    CHECK(t.to_text().find("*") != std::string::npos);
    CHECK(t.to_csv().find(",best\n") != std::string::npos);
  }
  CHECK_THROWS_AS(ablation_report({}), ValidationError);
}

TEST_CASE("proportion experiment") {
  using util::Json;
  gateway::MockEndpoint mock(Json{{"chat", Json{{"rules", Json::array({
      Json{{"match", "/h1."}, {"content", "{'country': 'Japan', 'city': 'Tokyo'}"}},
      Json{{"match", "/h2."}, {"content", "{'country': 'France', 'city': 'Paris'}"}},
      Json{{"match", "/l1."}, {"content", "{'country': 'Japan', 'city': 'Osaka'}"}},
      Json{{"match", "/l2."}, {"content", "{'country': 'Spain', 'city': 'Madrid'}"}}})}}}});
  mock.start();
  gateway::EndpointConfig cfg;
  cfg.base_url = mock.base_url();
  cfg.max_retries = 0;
  std::vector<GroundTruth> truth{{"h1", "Japan", "Tokyo", {}}, {"h2", "France", "Paris", {}},
                                 {"l1", "Japan", "Tokyo", {}}, {"l2", "France", "Paris", {}}};
  std::vector<DatasetVariant> variants{
      {0.0, {{"l1", "https://x/l1.jpg"}, {"l2", "https://x/l2.jpg"}}},
      {1.0, {{"h1", "https://x/h1.jpg"}, {"h2", "https://x/h2.jpg"}}}};
  const auto dir = testing_support::scratch_dir("prop");
  auto rows = proportion_experiment(variants, cfg, truth, dir);
  REQUIRE(rows.size() == 2);
  CHECK(*rows[0].country_accuracy == 0.5);
  CHECK(*rows[0].city_accuracy == 0.0);
  CHECK(*rows[1].country_accuracy == 1.0);
  CHECK(*rows[1].city_accuracy == 1.0);
  CHECK(curve_rows_to_csv(rows).rfind("high_fraction,country_accuracy,city_accuracy,images\n", 0) == 0);
  CHECK(proportion_experiment({}, cfg, truth, dir).empty());
  std::filesystem::remove_all(dir);
}

}
