// geoloc: command-line front end for the sampling, curation, corpus, inference
// and evaluation stages.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "geoloc/clues/clue_corpus.hpp"
#include "geoloc/clues/taggers.hpp"
#include "geoloc/error.hpp"
#include "geoloc/eval/gazetteer.hpp"
#include "geoloc/eval/report.hpp"
#include "geoloc/gateway/batch.hpp"
#include "geoloc/gateway/embeddings.hpp"
#include "geoloc/geo/road_network.hpp"
#include "geoloc/geo/sampler.hpp"
#include "geoloc/locatability/io.hpp"
#include "geoloc/pipeline/config.hpp"
#include "geoloc/pipeline/stages.hpp"
#include "geoloc/util/text.hpp"

namespace {

namespace fs = std::filesystem;
using geoloc::util::Json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;
constexpr int kExitEndpoint = 4;

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

geoloc::pipeline::PipelineConfig load_config(const Globals& g, bool required = true) {
  geoloc::pipeline::PipelineConfig cfg;
  if (!g.config.empty()) {
    cfg = geoloc::pipeline::PipelineConfig::load(g.config);
  } else if (required) {
    throw geoloc::ValidationError("this command needs --config (or its direct-input flags)");
  }
  if (!g.out.empty()) cfg.paths.output = g.out;
  if (g.seed) cfg.params.seed = *g.seed;
  return cfg;
}

void print_stage(const geoloc::pipeline::StageRun& r) {
  std::cerr << fmt::format("{:<13} {}\n", r.stage,
                           r.status == geoloc::pipeline::StageStatus::kRan ? "ran" : "skipped");
}

int run_stage_verb(const std::string& stage, const Globals& g) {
  const auto cfg = load_config(g);
  geoloc::pipeline::RunContext ctx;
  ctx.should_stop = [] { return g_interrupted != 0; };
  print_stage(geoloc::pipeline::run_stage(stage, cfg, ctx));
  return kExitOk;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    geoloc::util::write_text_file(path, text);
  }
}

std::vector<double> parse_thresholds(const std::string& s) {
  std::vector<double> out;
  for (const auto& part : geoloc::util::split(s, ',')) {
    const std::string t = geoloc::util::trim(part);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw geoloc::ValidationError(fmt::format("--thresholds: '{}' is not a number", t));
    }
  }
  return out;
}

std::unique_ptr<geoloc::clues::Tagger> make_tagger(const std::string& spec,
                                                   const std::string& gazetteer_path,
                                                   const Globals& g) {
  if (spec == "gazetteer") {
    std::string path = gazetteer_path;
    if (path.empty() && !g.config.empty()) {
      const auto cfg = load_config(g);
      if (cfg.paths.gazetteer) path = cfg.paths.gazetteer->string();
    }
    if (path.empty()) throw geoloc::ValidationError("--tagger gazetteer needs --gazetteer");
    return std::make_unique<geoloc::clues::GazetteerTagger>(
        geoloc::eval::Gazetteer::load_csv(path));
  }
  if (spec.rfind("endpoint:", 0) == 0) {
    const std::string target = spec.substr(9);
    geoloc::gateway::EndpointConfig ep;
    if (!g.config.empty()) {
      const auto cfg = load_config(g);
      if (cfg.endpoints.count(target) != 0 || cfg.endpoint_errors.count(target) != 0) {
        ep = cfg.endpoint(target);
      }
    }
    if (ep.base_url.empty()) {
      ep.name = "tagger";
      ep.base_url = target;
    }
    return std::make_unique<geoloc::clues::EndpointTagger>(ep);
  }
  throw geoloc::ValidationError(
      fmt::format("--tagger must be 'gazetteer' or 'endpoint:<url>', got '{}'", spec));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Street-view geolocation dataset and evaluation toolkit", "geoloc"};
  app.require_subcommand(1);
  // Global options may follow the verb.
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Pipeline INI config")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output file (direct mode) or output directory (config mode)");
  app.add_option("--seed", g.seed, "Overrides params.seed");

  // sample
  auto* sample = app.add_subcommand("sample", "Sample points and view headings along roads");
  std::string roads;
  double interval_m = geoloc::geo::kDefaultIntervalM;
  sample->add_option("--roads", roads, "GeoJSON road network")->check(CLI::ExistingFile);
  sample->add_option("--interval-m", interval_m, "Sampling interval in meters");
  sample->callback([&] {
    if (roads.empty()) {
      run_stage_verb("sample", g);
      return;
    }
    const auto net = geoloc::geo::load_road_network(roads);
    auto samples = geoloc::geo::sample_points(net, interval_m);
    geoloc::geo::select_all_views(samples, g.seed.value_or(0));
    write_or_print(g.out, geoloc::geo::samples_to_csv(samples));
    std::cerr << fmt::format("{} samples from {} polylines ({} non-line features skipped)\n",
                             samples.size(), net.polylines.size(), net.skipped_features);
  });

  // weights
  auto* weights = app.add_subcommand("weights", "Derive locatability weights from embeddings");
  std::string clue_emb, label_emb, schema_id;
  double tau = 0.5;
  weights->add_option("--clues", clue_emb, "Clue embeddings JSONL")->check(CLI::ExistingFile);
  weights->add_option("--labels", label_emb, "Label embeddings JSONL")->check(CLI::ExistingFile);
  weights->add_option("--tau", tau, "Similarity threshold after min-max scaling");
  weights->add_option("--schema-id", schema_id, "Label schema id (default: hash of labels)");
  weights->callback([&] {
    if (clue_emb.empty() && label_emb.empty()) {
      run_stage_verb("weights", g);
      return;
    }
    if (clue_emb.empty() || label_emb.empty()) {
      throw geoloc::ValidationError("weights needs both --clues and --labels");
    }
    namespace loc = geoloc::loc;
    const auto clue_recs = loc::load_embeddings(clue_emb);
    const auto label_recs = loc::load_embeddings(label_emb);
    const auto schema = loc::label_schema_of(label_recs, schema_id);
    const auto w = loc::build_weights(loc::vectors_of(clue_recs, loc::EmbeddingKind::kClue),
                                      loc::vectors_of(label_recs, loc::EmbeddingKind::kLabel),
                                      tau, schema,
                                      "clues-" + geoloc::util::sha256_file(clue_emb).substr(0, 12));
    write_or_print(g.out, loc::weights_to_json(w).dump(2) + "\n");
  });

  // score
  auto* score = app.add_subcommand("score", "Score segmentation profiles");
  std::string profiles, weights_path;
  score->add_option("--profiles", profiles, "Profiles JSONL")->check(CLI::ExistingFile);
  score->add_option("--weights", weights_path, "Weights JSON")->check(CLI::ExistingFile);
  score->callback([&] {
    if (profiles.empty() && weights_path.empty()) {
      run_stage_verb("score", g);
      return;
    }
    if (profiles.empty() || weights_path.empty()) {
      throw geoloc::ValidationError("score needs both --profiles and --weights");
    }
    const auto scores = geoloc::loc::score_profiles(geoloc::loc::load_profiles(profiles),
                                                    geoloc::loc::load_weights(weights_path));
    write_or_print(g.out, geoloc::loc::scores_to_jsonl(scores));
  });

  // curate
  auto* curate = app.add_subcommand("curate", "Split scored images at the locatability threshold");
  std::string scores_path;
  double threshold = geoloc::loc::kDefaultLocatabilityThreshold;
  curate->add_option("--scores", scores_path, "Scores JSONL")->check(CLI::ExistingFile);
  curate->add_option("--threshold", threshold, "Locatability threshold");
  curate->callback([&] {
    if (scores_path.empty()) {
      run_stage_verb("curate", g);
      return;
    }
    const auto r =
        geoloc::loc::filter_by_locatability(geoloc::loc::load_scores(scores_path), threshold);
    write_or_print(g.out, geoloc::loc::curation_to_json(r).dump(2) + "\n");
    std::cerr << fmt::format("high {}  low {}\n", r.high.size(), r.low.size());
  });

  // clues
  auto* clues = app.add_subcommand("clues", "Ingest, filter and export clue corpora");
  clues->require_subcommand(0, 1);
  std::string clue_in, tagger_spec = "gazetteer", gazetteer_path, kept_path, dropped_path;
  std::string curated_path, geotags_path;
  int tagger_retries = 2, tagger_parallel = 1;

  auto* c_ingest = clues->add_subcommand("ingest", "Load and deduplicate clue JSONL");
  c_ingest->add_option("--in", clue_in, "Clue JSONL")->required()->check(CLI::ExistingFile);
  c_ingest->callback([&] {
    const auto r = geoloc::clues::ingest_clues(clue_in);
    write_or_print(g.out, geoloc::clues::clues_to_jsonl(r.records));
    std::cerr << fmt::format("{} records, {} duplicates collapsed, {} rejected\n",
                             r.records.size(), r.duplicates, r.rejections.size());
    for (const auto& rej : r.rejections) {
      std::cerr << fmt::format("  line {}: {}\n", rej.line, rej.reason);
    }
  });

  auto* c_filter = clues->add_subcommand("filter", "Keep clues that name a place");
  c_filter->add_option("--in", clue_in, "Clue JSONL")->required()->check(CLI::ExistingFile);
  c_filter->add_option("--tagger", tagger_spec, "gazetteer | endpoint:<url-or-name>");
  c_filter->add_option("--gazetteer", gazetteer_path, "Gazetteer CSV for the offline tagger");
  c_filter->add_option("--kept", kept_path, "Output for kept records")->required();
  c_filter->add_option("--dropped", dropped_path, "Output for dropped records");
  c_filter->add_option("--retries", tagger_retries, "Extra attempts when the tagger is down");
  c_filter->add_option("--parallel", tagger_parallel, "Concurrent tagging calls");
  c_filter->callback([&] {
    auto tagger = make_tagger(tagger_spec, gazetteer_path, g);
    const auto r = geoloc::clues::filter_geo_entities(geoloc::clues::ingest_clues(clue_in).records,
                                                      *tagger, tagger_retries, tagger_parallel);
    geoloc::util::write_text_file(kept_path, geoloc::clues::clues_to_jsonl(r.kept));
    if (!dropped_path.empty()) {
      std::string lines;
      for (std::size_t i = 0; i < r.dropped.size(); ++i) {
        Json j = geoloc::clues::clue_to_json(r.dropped[i]);
        j["cause"] = r.drop_causes[i].reason;
        lines += geoloc::util::jsonl_line(j);
      }
      geoloc::util::write_text_file(dropped_path, lines);
    }
    std::cerr << fmt::format("kept {}  dropped {}\n", r.kept.size(), r.dropped.size());
  });

  auto* c_s1 = clues->add_subcommand("export-stage1", "Reasoning-tuning corpus");
  c_s1->add_option("--in", clue_in, "Kept clue JSONL")->required()->check(CLI::ExistingFile);
  c_s1->callback([&] {
    const auto r =
        geoloc::clues::export_reasoning_corpus(geoloc::clues::ingest_clues(clue_in).records);
    write_or_print(g.out, geoloc::clues::examples_to_jsonl(r.examples));
    std::cerr << fmt::format("exported {}  skipped {}\n", r.examples.size(), r.skipped.size());
    for (const auto& s : r.skipped) std::cerr << fmt::format("  {}: {}\n", s.id, s.reason);
  });

  auto* c_s2 = clues->add_subcommand("export-stage2", "Location-tuning corpus");
  c_s2->add_option("--curated", curated_path, "Curation JSON")->required()->check(CLI::ExistingFile);
  c_s2->add_option("--geotags", geotags_path, "Geo-tag JSONL")->required()->check(CLI::ExistingFile);
  c_s2->callback([&] {
    const auto curation = geoloc::loc::curation_from_json(
        Json::parse(geoloc::util::read_text_file(curated_path)));
    const auto joined = geoloc::clues::join_high_with_geotags(
        curation.high, geoloc::clues::load_geotags(geotags_path));
    auto r = geoloc::clues::export_location_corpus(joined.images);
    r.skipped.insert(r.skipped.end(), joined.unmatched.begin(), joined.unmatched.end());
    write_or_print(g.out, geoloc::clues::examples_to_jsonl(r.examples));
    std::cerr << fmt::format("exported {}  skipped {}\n", r.examples.size(), r.skipped.size());
    for (const auto& s : r.skipped) std::cerr << fmt::format("  {}: {}\n", s.id, s.reason);
  });

  clues->callback([&] {
    if (clues->get_subcommands().empty()) run_stage_verb("clues", g);
  });

  // export-train
  auto* export_train = app.add_subcommand("export-train", "Write both tuning corpora (config mode)");
  export_train->callback([&] { run_stage_verb("export-train", g); });

  // infer
  auto* infer = app.add_subcommand("infer", "Query a vision-language endpoint for every image");
  std::string manifest_path, endpoint_name, checkpoint_path;
  infer->add_option("--manifest", manifest_path, "Manifest CSV or JSONL")->check(CLI::ExistingFile);
  infer->add_option("--endpoint", endpoint_name, "Endpoint section name in the config");
  infer->add_option("--checkpoint", checkpoint_path, "Checkpoint JSONL (resumed when present)");
  infer->callback([&] {
    if (manifest_path.empty()) {
      run_stage_verb("infer", g);
      return;
    }
    const auto cfg = load_config(g);
    const std::string name = endpoint_name.empty() ? cfg.params.infer_endpoint : endpoint_name;
    if (checkpoint_path.empty()) throw geoloc::ValidationError("infer needs --checkpoint");
    geoloc::gateway::BatchOptions opts;
    opts.checkpoint = checkpoint_path;
    opts.should_stop = [] { return g_interrupted != 0; };
    const auto r =
        geoloc::gateway::batch_infer(geoloc::gateway::load_manifest(manifest_path),
                                     cfg.endpoint(name), opts);
    std::string lines;
    for (const auto& rec : r.records) {
      lines += geoloc::util::jsonl_line(geoloc::gateway::prediction_to_json(rec, false));
    }
    write_or_print(g.out, lines);
    std::cerr << fmt::format("{} records ({} resumed, {} requests)\n", r.records.size(),
                             r.resumed, r.requests_issued);
    if (!r.complete) throw geoloc::StageError("interrupted; rerun to resume");
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  std::string preds_path, truth_path, eval_gazetteer, aliases_path, thresholds_arg = "1,25,750";
  eval->add_option("--preds", preds_path, "Predictions JSONL")->check(CLI::ExistingFile);
  eval->add_option("--truth", truth_path, "Truth JSONL")->check(CLI::ExistingFile);
  eval->add_option("--gazetteer", eval_gazetteer, "Gazetteer CSV")->check(CLI::ExistingFile);
  eval->add_option("--aliases", aliases_path, "Alias CSV")->check(CLI::ExistingFile);
  eval->add_option("--thresholds", thresholds_arg, "Distance thresholds in km");
  eval->callback([&] {
    if (preds_path.empty()) {
      run_stage_verb("eval", g);
      return;
    }
    if (truth_path.empty()) throw geoloc::ValidationError("eval needs --truth");
    std::vector<geoloc::gateway::PredictionRecord> preds;
    geoloc::util::for_each_jsonl(preds_path, [&](std::size_t, const Json& j) {
      preds.push_back(geoloc::gateway::prediction_from_json(j));
    });
    geoloc::eval::AliasTable aliases;
    if (!aliases_path.empty()) aliases = geoloc::eval::AliasTable::load_csv(aliases_path);
    std::optional<geoloc::eval::Gazetteer> gaz;
    if (!eval_gazetteer.empty()) gaz = geoloc::eval::Gazetteer::load_csv(eval_gazetteer, &aliases);
    const auto report =
        geoloc::eval::evaluate(preds, geoloc::eval::load_truth(truth_path), gaz ? &*gaz : nullptr,
                               parse_thresholds(thresholds_arg), &aliases);
    if (!g.out.empty()) {
      const fs::path dir = g.out;
      geoloc::util::write_text_file(dir / "report.json",
                                    geoloc::eval::report_to_json(report).dump(2) + "\n");
      geoloc::util::write_text_file(dir / "report.txt", geoloc::eval::report_to_text(report));
      geoloc::util::write_text_file(dir / "report.csv", geoloc::eval::report_to_csv(report));
    }
    std::cout << geoloc::eval::report_to_text(report);
  });

  // report
  auto* report = app.add_subcommand("report", "Ablation table and class-proportion curves");
  std::vector<std::string> run_specs;
  bool as_csv = false;
  report->add_option("--run", run_specs, "name=report.json (repeatable)");
  report->add_flag("--csv", as_csv, "Print CSV instead of the aligned table");
  report->callback([&] {
    if (run_specs.empty()) {
      run_stage_verb("report", g);
      return;
    }
    std::vector<std::pair<std::string, geoloc::eval::EvalReport>> runs;
    for (const auto& spec : run_specs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw geoloc::ValidationError(fmt::format("--run expects name=path, got '{}'", spec));
      }
      runs.emplace_back(spec.substr(0, eq),
                        geoloc::eval::report_from_json(
                            Json::parse(geoloc::util::read_text_file(spec.substr(eq + 1)))));
    }
    const auto table = geoloc::eval::ablation_report(runs);
    write_or_print(g.out, as_csv ? table.to_csv() : table.to_text());
  });

  // run-all
  auto* run_all = app.add_subcommand("run-all", "Run every stage, skipping unchanged ones");
  bool force = false;
  run_all->add_flag("--force", force, "Re-run stages even when their hashes match");
  run_all->callback([&] {
    const auto cfg = load_config(g);
    geoloc::pipeline::RunContext ctx;
    ctx.force = force;
    ctx.should_stop = [] { return g_interrupted != 0; };
    std::vector<geoloc::pipeline::StageRun> runs;
    const auto report = geoloc::pipeline::run_all(cfg, ctx, &runs);
    for (const auto& r : runs) print_stage(r);
    std::cout << geoloc::eval::report_to_text(report);
  });

  // embed
  auto* embed = app.add_subcommand("embed", "Fetch clue and label embeddings from an endpoint");
  std::string embed_clues, embed_labels;
  embed->add_option("--clues", embed_clues, "Clue JSONL")->required()->check(CLI::ExistingFile);
  embed->add_option("--labels", embed_labels, "Text file, one label per line")
      ->required()
      ->check(CLI::ExistingFile);
  embed->add_option("--endpoint", endpoint_name, "Endpoint section name in the config")->required();
  embed->callback([&] {
    const auto cfg = load_config(g);
    const auto& ep = cfg.endpoint(endpoint_name);
    std::vector<geoloc::gateway::TextItem> clue_items, label_items;
    for (const auto& r : geoloc::clues::ingest_clues(embed_clues).records) {
      clue_items.push_back({r.id, r.text});
    }
    for (const auto& line : geoloc::util::split(geoloc::util::read_text_file(embed_labels), '\n')) {
      const std::string label = geoloc::util::trim(line);
      if (!label.empty()) label_items.push_back({label, label});
    }
    auto records = geoloc::gateway::fetch_embeddings(clue_items, geoloc::loc::EmbeddingKind::kClue, ep);
    const auto labels =
        geoloc::gateway::fetch_embeddings(label_items, geoloc::loc::EmbeddingKind::kLabel, ep);
    records.insert(records.end(), labels.begin(), labels.end());
    write_or_print(g.out, geoloc::loc::embeddings_to_jsonl(records));
  });

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const geoloc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case geoloc::ErrorKind::kValidation: return kExitValidation;
      case geoloc::ErrorKind::kStage: return kExitStage;
      case geoloc::ErrorKind::kEndpoint: return kExitEndpoint;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitOk;
}
