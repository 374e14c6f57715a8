#include <doctest.h>

#include <cstdlib>
#include <string>

#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/gateway/mock_server.hpp"
#include "geoloc/pipeline/config.hpp"
#include "geoloc/pipeline/stages.hpp"
#include "support.hpp"

using namespace geoloc;
using namespace geoloc::pipeline;
namespace fs = std::filesystem;

namespace {

// Copy of the end-to-end fixture in a scratch directory, so tests may edit
// inputs freely.
struct Workspace {
  fs::path dir;
  fs::path ini;
  explicit Workspace(const std::string& tag) : dir(testing_support::scratch_dir(tag)) {
    const fs::path src = testing_support::fixture("e2e");
    for (const auto& e : fs::directory_iterator(src)) fs::copy_file(e.path(), dir / e.path().filename());
    std::string text = util::read_text_file(src / "pipeline.ini");
    auto swap = [&](const std::string& from, const fs::path& to) {
      text.replace(text.find(from), from.size(), to.string());
    };
    swap("../../gazetteer.csv", testing_support::data_dir() / "gazetteer.csv");
    swap("../../aliases.csv", testing_support::data_dir() / "aliases.csv");
    ini = dir / "pipeline.ini";
    util::write_text_file(ini, text);
  }
  ~Workspace() { fs::remove_all(dir); }
  PipelineConfig config() const { return PipelineConfig::load(ini); }
};

std::string status_of(const StageRun& r) { return r.status == StageStatus::kRan ? "ran" : "skipped"; }

int run_cli(const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} >/dev/null 2>&1", GEOLOC_CLI, args);
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing") {
  SUBCASE("empty config lists every missing input") {
    auto cfg = PipelineConfig::from_text("", "/tmp");
    try {
      cfg.require_complete();
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      for (const char* key : {"paths.roads", "paths.profiles", "paths.embeddings", "paths.clues",
                              "paths.geotags", "paths.manifest", "paths.gazetteer", "paths.truth",
                              "params.infer_endpoint"}) {
        CHECK_MESSAGE(msg.find(key) != std::string::npos, key);
      }
    }
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(PipelineConfig::from_text("[params]\ntua = 0.5\n", "/tmp"), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::from_text("[extra]\nx = 1\n", "/tmp"), ValidationError);
  }
  SUBCASE("relative paths resolve against the config directory") {
    auto cfg = PipelineConfig::from_text("[paths]\nroads = r.geojson\n", "/data/run");
    CHECK(*cfg.paths.roads == fs::path("/data/run/r.geojson"));
  }
  SUBCASE("an unset variable fails only when its endpoint is used") {
    ::unsetenv("GEOLOC_TEST_UNSET");
    auto cfg = PipelineConfig::from_text("[endpoint.x]\nbase_url = ${GEOLOC_TEST_UNSET}\n", "/tmp");
    CHECK_THROWS_AS(cfg.endpoint("x"), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::from_text("[paths]\nroads = ${GEOLOC_TEST_UNSET}\n", "/tmp"),
                    ValidationError);
    ::setenv("GEOLOC_TEST_SET", "abc", 1);
    CHECK(interpolate_env("x${GEOLOC_TEST_SET}y") == "xabcy");
  }
}

TEST_CASE("stage ordering and incremental reruns") {
  Workspace ws("stages");
  const auto cfg = ws.config();

  SUBCASE("score without weights names the weights stage") {
    try {
      run_stage("score", cfg);
      FAIL("expected StageError");
    } catch (const StageError& e) {
      CHECK(std::string(e.what()).find("'weights'") != std::string::npos);
    }
  }
  SUBCASE("weights then score succeeds and reruns are skipped") {
    CHECK(status_of(run_stage("weights", cfg)) == "ran");
    CHECK(status_of(run_stage("score", cfg)) == "ran");
    CHECK(status_of(run_stage("weights", cfg)) == "skipped");
    CHECK(status_of(run_stage("score", cfg)) == "skipped");
    CHECK(verify_run_manifest(cfg.paths.output).empty());

    // A damaged output forces that stage to run again.
    util::write_text_file(cfg.paths.output / "scores.jsonl", "tampered\n");
    CHECK_FALSE(verify_run_manifest(cfg.paths.output).empty());
    CHECK(status_of(run_stage("score", cfg)) == "ran");
    CHECK(verify_run_manifest(cfg.paths.output).empty());
  }
  SUBCASE("a stage needing an absent config path says which") {
    auto partial = cfg;
    partial.paths.roads.reset();
    CHECK_THROWS_AS(run_stage("sample", partial), ValidationError);
  }
  CHECK_THROWS_AS(run_stage("nonsense", cfg), ValidationError);
}

TEST_CASE("run-all against the mock") {
  Workspace ws("runall");
  gateway::MockEndpoint mock(util::Json::parse(util::read_text_file(ws.dir / "mock_script.json")));
  mock.start();
  ::setenv("GEOLOC_MOCK_URL", mock.base_url().c_str(), 1);
  const auto cfg = ws.config();

  std::vector<StageRun> runs;
  auto rep = run_all(cfg, {}, &runs);
  REQUIRE(runs.size() == stage_names().size());
  for (const auto& r : runs) CHECK(status_of(r) == "ran");
  CHECK(rep.counts.total == 20);
  CHECK(rep.country.recall == doctest::Approx(0.9));
  CHECK(verify_run_manifest(cfg.paths.output).empty());
  CHECK(mock.chat_requests() == 20);

  SUBCASE("an unchanged rerun skips everything") {
    runs.clear();
    mock.reset_counters();
    run_all(cfg, {}, &runs);
    for (const auto& r : runs) CHECK(status_of(r) == "skipped");
    CHECK(mock.chat_requests() == 0);
  }
  SUBCASE("editing the clue file reruns only its dependents") {
    std::string clues = util::read_text_file(ws.dir / "clues.jsonl");
    clues += R"({"id": "c99", "text": "Blue street plates are common in Oslo", "image_ref": "clues/99.jpg", "country": "Norway"})"
             "\n";
    util::write_text_file(ws.dir / "clues.jsonl", clues);
    runs.clear();
    mock.reset_counters();
    run_all(cfg, {}, &runs);
    std::map<std::string, std::string> status;
    for (const auto& r : runs) status[r.stage] = status_of(r);
    CHECK(status["sample"] == "skipped");
    CHECK(status["weights"] == "skipped");  // weights read embeddings, not clue text
    CHECK(status["score"] == "skipped");
    CHECK(status["curate"] == "skipped");
    CHECK(status["clues"] == "ran");
    CHECK(status["export-train"] == "ran");
    CHECK(status["infer"] == "skipped");
    CHECK(status["eval"] == "skipped");
    CHECK(mock.chat_requests() == 0);
    CHECK(verify_run_manifest(cfg.paths.output).empty());
  }
}

TEST_CASE("CLI exit codes") {
  Workspace ws("cli");
  const std::string base = fmt::format("--config \"{}\" --out \"{}\"", ws.ini.string(),
                                       (ws.dir / "out").string());
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("no-such-verb") == 2);
  CHECK(run_cli(fmt::format("--config \"{}\" run-all", (ws.dir / "missing.ini").string())) == 2);
  CHECK(run_cli(fmt::format("sample --roads \"{}\" --seed 7 --out \"{}\"",
                            (ws.dir / "roads.geojson").string(), (ws.dir / "s.csv").string())) == 0);
  CHECK(fs::is_regular_file(ws.dir / "s.csv"));
  CHECK(run_cli(base + " score") == 3);
  CHECK(run_cli(base + " weights") == 0);
  CHECK(run_cli(base + " score") == 0);
  ::setenv("GEOLOC_MOCK_URL", "http://127.0.0.1:9", 1);
  CHECK(run_cli(base + " infer") == 4);
}

}
