// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "geoloc/clues/clue_corpus.hpp"
#include "geoloc/error.hpp"
#include "geoloc/eval/gazetteer.hpp"
#include "geoloc/eval/metrics.hpp"
#include "geoloc/gateway/mock_server.hpp"
#include "geoloc/gateway/response_parser.hpp"
#include "geoloc/geo/geodesy.hpp"
#include "geoloc/geo/road_network.hpp"
#include "geoloc/geo/sampler.hpp"
#include "geoloc/locatability/pipeline.hpp"
#include "geoloc/pipeline/config.hpp"
#include "geoloc/pipeline/stages.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace geoloc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

// 1. Published F1 cells from the (accuracy, recall) pairs.
Outcome f1_reproduction() {
  struct Cell {
    const char* row;
    double acc, rec, f1;
  };
  const std::vector<Cell> cells = {
      {"comparison StreetCLIP country", 0.7943, 1.00, 0.8854}, {"comparison StreetCLIP city", 0.7457, 1.00, 0.8543},
      {"comparison LLaVA country", 0.4029, 1.00, 0.5744},      {"comparison LLaVA city", 0.2400, 1.00, 0.3871},
      {"comparison Qwen-VL country", 0.5829, 0.95, 0.7225},    {"comparison Qwen-VL city", 0.3743, 0.89, 0.5270},
      {"comparison GPT-4V country", 0.8917, 0.34, 0.4923},     {"comparison GPT-4V city", 0.5083, 0.31, 0.3851},
      {"comparison ViT country", 0.7100, 1.00, 0.8304},        {"comparison ViT city", 0.6762, 1.00, 0.8068},
      {"comparison GeoReasoner country", 0.8237, 1.00, 0.9033}, {"comparison GeoReasoner city", 0.7521, 1.00, 0.8585},
      {"ablation Qwen-VL country", 0.5829, 0.95, 0.7225},    {"ablation Qwen-VL city", 0.3743, 0.89, 0.5270},
      {"ablation w/o location country", 0.6971, 1.00, 0.8215}, {"ablation w/o location city", 0.4114, 0.99, 0.5813},
      {"ablation w/o reasoning country", 0.7803, 1.00, 0.8766}, {"ablation w/o reasoning city", 0.7029, 1.00, 0.8255},
      {"ablation full country", 0.8237, 1.00, 0.9033},       {"ablation full city", 0.7521, 1.00, 0.8584},
  };
  Outcome o;
  std::size_t ok = 0;
  std::string misses;
  for (const auto& c : cells) {
    const double f1 = eval::LevelMetrics::from_rates(c.acc, c.rec).f1;
    const double err = std::abs(f1 - c.f1);
    if (err <= 1e-4) {
      ++ok;
    } else {
      misses += fmt::format("; {} computed {:.6f} printed {:.4f} (off {:.2e})", c.row, f1, c.f1, err);
    }
  }
  o.require(ok == cells.size(), "");
  o.detail = fmt::format("{}/{} cells within 1e-4{}", ok, cells.size(), misses);
  return o;
}

// 2. Batched scores vs a brute-force dot product.
Outcome score_oracle() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 16;
    std::vector<double> w(n), p(n);
    double ws = 0, ps = 0;
    for (auto& x : w) ws += (x = u(rng));
    for (auto& x : p) ps += (x = u(rng));
    const double cover = u(rng);
    for (auto& x : w) x /= ws;
    for (auto& x : p) x = x / ps * cover;
    loc::LocatabilityWeights lw{"s", {}, w, 0.5, ""};
    const double s = loc::locatability_score({"img", "s", p}, lw).score;
    worst = std::max(worst, std::abs(s - oracle::dot(p, w)));
  }
  o.require(worst <= 1e-12, "");
  o.detail = fmt::format("1000 pairs, max abs diff {:.2e}", worst);
  return o;
}

// 3. Normalize -> threshold -> reduce vs the straight-line oracle.
Outcome weight_oracle() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const double taus[] = {0.0, 0.3, 0.5, 1.0};
  double worst = 0;
  int runs = 0;
  while (runs < 200) {
    const std::size_t m = 1 + rng() % 10, n = 1 + rng() % 10;
    if (m * n < 2) continue;
    std::vector<std::vector<double>> raw(m, std::vector<double>(n));
    std::vector<double> flat;
    for (auto& row : raw)
      for (auto& x : row) flat.push_back(x = u(rng));
    const double tau = taus[runs % 4];
    const loc::SimilarityMatrix sm(m, n, flat, loc::MatrixStage::kRaw);
    const auto w = loc::reduce_to_weights(loc::threshold_zero(loc::minmax_normalize(sm), tau), "s");
    const auto ref = oracle::weights(raw, tau);
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(w.weights[j] - ref[j]));
    ++runs;
  }
  o.require(worst <= 1e-12, fmt::format("max abs diff {:.2e}", worst));
  bool degenerate_raised = false;
  try {
    loc::minmax_normalize(loc::SimilarityMatrix(3, 3, std::vector<double>(9, 0.42), loc::MatrixStage::kRaw));
  } catch (const loc::DegenerateMatrixError&) {
    degenerate_raised = true;
  }
  o.require(degenerate_raised, "constant matrix did not raise DegenerateMatrixError");
  if (o.pass) o.detail = fmt::format("200 matrices, max abs diff {:.2e}; constant matrix raises", worst);
  return o;
}

// 4. Curation boundary and threshold monotonicity.
Outcome curation() {
  Outcome o;
  auto r = loc::filter_by_locatability(
      std::vector<loc::LocatabilityScore>{{"a", 0.39}, {"b", 0.40}, {"c", 0.41}}, 0.40);
  o.require(r.high.size() == 2 && r.low.size() == 1 && r.low[0].image_id == "a",
            "boundary partition wrong");

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<loc::SegmentationProfile> profiles;
  const std::vector<double> w{0.4, 0.3, 0.2, 0.1};
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p(4);
    double s = 0;
    for (auto& x : p) s += (x = u(rng));
    for (auto& x : p) x /= s;
    profiles.push_back({fmt::format("img{:03}", i), "s", p});
  }
  const loc::LocatabilityWeights lw{"s", {}, w, 0.5, ""};
  std::size_t prev = profiles.size();
  for (int k = 0; k <= 10; ++k) {
    const double th = 0.2 + 0.01 * k;
    const auto part = loc::filter_by_locatability(profiles, lw, th);
    std::size_t expected = 0;
    for (const auto& p : profiles) expected += oracle::dot(p.ratios, w) >= th;
    o.require(part.high.size() == expected, fmt::format("threshold {} partition differs", th));
    o.require(part.high.size() <= prev, "not monotone");
    prev = part.high.size();
  }
  if (o.pass) o.detail = "boundary {0.40, 0.41} high; 11-threshold sweep monotone and matches oracle";
  return o;
}

// 5. Samples along a 12 km great-circle line.
Outcome sampling() {
  Outcome o;
  const geo::LatLon a{48.1, 11.5};
  const auto [blat, blon] = oracle::project(a.lat, a.lon, 73.0, 12.0);
  const std::string gj = fmt::format(
      R"({{"type":"FeatureCollection","features":[{{"type":"Feature","properties":{{"id":"g"}},)"
      R"("geometry":{{"type":"LineString","coordinates":[[{:.12f},{:.12f}],[{:.12f},{:.12f}]]}}}}]}})",
      a.lon, a.lat, blon, blat);
  auto samples = geo::sample_points(geo::parse_road_network(gj), 4000.0);
  o.require(samples.size() == 4, fmt::format("{} samples instead of 4", samples.size()));
  double worst = 0;
  for (std::size_t k = 0; k < samples.size() && k < 4; ++k) {
    const auto [lat, lon] = oracle::along(a.lat, a.lon, blat, blon, 4.0 * k);
    worst = std::max(worst, oracle::haversine_km(samples[k].position.lat, samples[k].position.lon, lat, lon) * 1000);
    o.require(std::abs(samples[k].arc_offset_m - 4000.0 * k) < 1e-6, "offset mismatch");
  }
  o.require(worst < 1.0, fmt::format("max deviation {:.3f} m", worst));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> f(0, 360);
  for (int i = 0; i < 1000; ++i) {
    const double front = f(rng);
    const auto h = geo::headings_from_front(front);
    o.require(h.front == front && h.back == std::fmod(front + 180, 360) &&
                  h.left == std::fmod(front + 270, 360) && h.right == std::fmod(front + 90, 360),
              "heading algebra");
  }
  if (o.pass) o.detail = fmt::format("offsets 0/4000/8000/12000 m, max deviation {:.2e} m; 1000 heading sets exact", worst);
  return o;
}

// 6. Geodesic distance.
Outcome distance() {
  Outcome o;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const geo::LatLon a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    const double ref = oracle::haversine_km(a.lat, a.lon, b.lat, b.lon);
    worst = std::max(worst, std::abs(geo::geodesic_distance_km(a, b) - ref) / ref);
  }
  o.require(worst <= 1e-9, fmt::format("relative error {:.2e}", worst));
  const double anti = geo::geodesic_distance_km({0, 0}, {0, 180});
  o.require(std::abs(anti - 3.14159265358979323846 * 6371.0088) <= 1e-9, "antipodal distance");
  double worst_tri = 0;
  for (int i = 0; i < 1000; ++i) {
    const geo::LatLon a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)}, c{lat(rng), lon(rng)};
    const double excess = geo::geodesic_distance_km(a, c) -
                          (geo::geodesic_distance_km(a, b) + geo::geodesic_distance_km(b, c));
    worst_tri = std::max(worst_tri, excess);
  }
  o.require(worst_tri <= 1e-9, "triangle inequality");
  if (o.pass)
    o.detail = fmt::format("max rel diff {:.2e}; antipode {:.6f} km; triangle ok", worst, anti);
  return o;
}

// 7. Threshold accuracy on constructed offsets.
Outcome threshold_fixture() {
  Outcome o;
  const auto g = eval::Gazetteer::load_csv(testing_support::data_dir() / "gazetteer.csv");
  const char* cities[] = {"Tokyo", "Nairobi", "Santiago", "Singapore"};
  const double offsets[] = {0.5, 10.0, 300.0, 2000.0};
  std::vector<eval::GroundTruth> truth;
  std::vector<gateway::PredictionRecord> preds;
  for (int i = 0; i < 4; ++i) {
    const auto* e = g.lookup(cities[i]);
    if (e == nullptr) {
      o.require(false, fmt::format("{} missing from gazetteer", cities[i]));
      return o;
    }
    const auto [lat, lon] = oracle::project(e->center.lat, e->center.lon, 90.0 * i + 15.0, offsets[i]);
    const std::string id = fmt::format("t{}", i);
    truth.push_back({id, e->country, e->city, geo::LatLon{lat, lon}});
    preds.push_back(gateway::make_prediction(
        id, fmt::format("{{\"country\": \"{}\", \"city\": \"{}\"}}", e->country, e->city)));
  }
  const auto t = eval::threshold_accuracy(preds, truth, g);
  o.require(t.fractions == std::vector<double>{0.25, 0.50, 0.75},
            fmt::format("fractions {}", fmt::join(t.fractions, "/")));
  for (std::size_t k = 1; k < t.fractions.size(); ++k) o.require(t.fractions[k] >= t.fractions[k - 1], "not monotone");
  if (o.pass) o.detail = "fractions 0.25/0.50/0.75 at 1/25/750 km";
  return o;
}

// 8. Parser robustness and the conservation identity.
Outcome parser_robustness() {
  Outcome o;
  std::vector<gateway::PredictionRecord> preds;
  for (const auto& r : gateway::RefusalDetector::default_patterns()) {
    auto p = gateway::make_prediction("r", r);
    o.require(!p.effective && p.failure_cause == gateway::FailureCause::kRefusal, "refusal misclassified");
    preds.push_back(p);
  }
  auto single = gateway::make_prediction("s", "{'country': 'Singapore', 'city': 'Singapore', 'reasons': '...'}");
  o.require(single.effective, "single-quoted schema");
  auto fenced = gateway::make_prediction(
      "f", "```json\n{\"Country\":\"China\",\"CITY\":\"Lhasa\",\"reasons\":\"...\"}\n```");
  o.require(fenced.effective && *fenced.country == "China" && *fenced.city == "Lhasa", "code fence");
  preds.push_back(single);
  preds.push_back(fenced);

  std::mt19937_64 rng(8);
  const std::string alphabet = "{}[]'\":,\\` \n\tcountrycityreasonsjson{'country':";
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const std::size_t len = rng() % 120;
    for (std::size_t k = 0; k < len; ++k) {
      s += rng() % 3 == 0 ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()];
    }
    try {
      auto p = gateway::make_prediction(fmt::format("z{}", i), s);
      p.validate();
      preds.push_back(std::move(p));
    } catch (const std::exception& e) {
      o.require(false, fmt::format("fuzz input {} threw: {}", i, e.what()));
      break;
    }
  }
  const auto c = eval::count_failures(preds);
  o.require(c.total == preds.size() && c.total == c.effective + c.failures(), "conservation identity");
  if (o.pass)
    o.detail = fmt::format("{} inputs: effective {} + refusal {} + unparseable {} + empty {} = {}",
                           c.total, c.effective, c.refusal, c.unparseable, c.empty, c.total);
  return o;
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root);
    if (*rel.begin() == ".state") continue;
    out.push_back(rel);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// 9. End-to-end run against the scripted mock.
Outcome end_to_end() {
  Outcome o;
  const fs::path src = testing_support::fixture("e2e");
  const fs::path work = testing_support::scratch_dir("accept-e2e");
  for (const auto& e : fs::directory_iterator(src)) fs::copy_file(e.path(), work / e.path().filename());
  std::string ini = util::read_text_file(src / "pipeline.ini");
  for (const char* f : {"gazetteer.csv", "aliases.csv"}) {
    const std::string rel = std::string("../../") + f;
    ini.replace(ini.find(rel), rel.size(), (testing_support::data_dir() / f).string());
  }
  util::write_text_file(work / "pipeline.ini", ini);

  gateway::MockEndpoint mock(util::Json::parse(util::read_text_file(src / "mock_script.json")));
  mock.start();
  ::setenv("GEOLOC_MOCK_URL", mock.base_url().c_str(), 1);

  auto cfg = pipeline::PipelineConfig::load(work / "pipeline.ini");
  cfg.paths.output = work / "run1";
  const auto rep = pipeline::run_all(cfg);
  cfg.paths.output = work / "run2";
  const auto rep2 = pipeline::run_all(cfg);

  const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  o.require(rep.counts.total == 20 && rep.counts.effective == 18 && rep.counts.refusal == 2, "counts");
  o.require(near(rep.country.recall, 0.9) && near(rep.city.recall, 0.9), "recall");
  o.require(rep.country.correct == 15 && near(*rep.country.accuracy, 15.0 / 18), "country accuracy");
  o.require(rep.city.correct == 12 && near(*rep.city.accuracy, 12.0 / 18), "city accuracy");
  o.require(near(rep.country.f1, oracle::f1(15.0 / 18, 0.9)) && near(rep.city.f1, oracle::f1(12.0 / 18, 0.9)),
            "F1 identity");

  const auto f1 = files_under(work / "run1"), f2 = files_under(work / "run2");
  o.require(f1 == f2, "different file sets");
  for (const auto& rel : f1) {
    if (rel == pipeline::kRunManifestName) continue;  // holds the output directory's own hashes only
    o.require(util::read_text_file(work / "run1" / rel) == util::read_text_file(work / "run2" / rel),
              fmt::format("{} differs between runs", rel.string()));
  }
  o.require(util::read_text_file(work / "run1" / pipeline::kRunManifestName) ==
                util::read_text_file(work / "run2" / pipeline::kRunManifestName),
            "run manifests differ");
  o.require(pipeline::verify_run_manifest(work / "run1").empty(), "hash chain broken");

  // Interrupt inference, then resume.
  cfg.paths.output = work / "run3";
  mock.reset_counters();
  pipeline::RunContext stop_early;
  stop_early.should_stop = [&] { return mock.chat_requests() >= 7; };
  bool interrupted = false;
  try {
    pipeline::run_stage("infer", cfg, stop_early);
  } catch (const StageError&) {
    interrupted = true;
  }
  o.require(interrupted, "interrupt not reported");
  std::size_t done = 0;
  for (const auto& e : fs::directory_iterator(work / "run3" / ".state")) {
    util::for_each_jsonl(e.path(), [&](std::size_t, const util::Json&) { ++done; });
  }
  const std::size_t first = mock.chat_requests();
  mock.reset_counters();
  pipeline::run_stage("infer", cfg);
  const std::size_t second = mock.chat_requests();
  o.require(done == first && first + second == 20,
            fmt::format("first run {} requests ({} checkpointed), resume {}", first, done, second));
  o.require(util::read_text_file(work / "run3" / "predictions.jsonl") ==
                util::read_text_file(work / "run1" / "predictions.jsonl"),
            "resumed predictions differ");
  if (o.pass)
    o.detail = fmt::format(
        "recall 0.90, country {:.4f} (F1 {:.4f}), city {:.4f} (F1 {:.4f}); {} files identical; "
        "resume issued {} of 20 after {}",
        *rep.country.accuracy, rep.country.f1, *rep.city.accuracy, rep.city.f1, f1.size(), second, first);
  mock.stop();
  fs::remove_all(work);
  return o;
}

// 10. Corpus exports.
Outcome corpus_export() {
  Outcome o;
  std::vector<clues::ClueRecord> recs;
  util::for_each_jsonl(testing_support::fixture("corpus_25.jsonl"),
                       [&](std::size_t, const util::Json& j) { recs.push_back(clues::clue_from_json(j)); });
  const auto s1 = clues::export_reasoning_corpus(recs);
  for (const auto& e : s1.examples) {
    o.require(e.reasons && !e.reasons->empty() && !e.city, "stage-1 example without reasons");
  }
  o.require(s1.examples.size() + s1.skipped.size() == recs.size(), "stage-1 totality");

  const auto tags = clues::load_geotags(testing_support::fixture("geotags_25.jsonl"));
  const auto s2 = clues::export_location_corpus(tags);
  for (const auto& e : s2.examples) o.require(!e.reasons && e.city, "stage-2 example with reasons");
  o.require(s2.examples.size() + s2.skipped.size() == tags.size(), "stage-2 totality");
  o.require(recs.size() == 25 && tags.size() == 25 && s1.skipped.size() == 5 && s2.skipped.size() == 5,
            "fixture sizes");
  if (o.pass)
    o.detail = fmt::format("stage 1: {} + {} skipped = 25; stage 2: {} + {} skipped = 25",
                           s1.examples.size(), s1.skipped.size(), s2.examples.size(), s2.skipped.size());
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "F1 reproduction", 1, f1_reproduction},
      {2, "score oracle equivalence", 5, score_oracle},
      {3, "weight pipeline oracle equivalence", 5, weight_oracle},
      {4, "curation boundary", 1, curation},
      {5, "sampling accuracy", 5, sampling},
      {6, "geodesic distance", 5, distance},
      {7, "threshold accuracy fixture", 1, threshold_fixture},
      {8, "parser robustness", 30, parser_robustness},
      {9, "end-to-end determinism", 60, end_to_end},
      {10, "corpus export", 1, corpus_export},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = fmt::format("exception: {}", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt::format(" (over the {} s budget)", c.budget_s);
    }
    failed += !o.pass;
    std::printf("%s criterion %d %s: %s [%.3f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
