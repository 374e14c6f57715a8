#include "geoloc/pipeline/stages.hpp"

#include <algorithm>
#include <map>
#include <memory>

#include <fmt/format.h>

#include "geoloc/clues/clue_corpus.hpp"
#include "geoloc/clues/taggers.hpp"
#include "geoloc/error.hpp"
#include "geoloc/eval/gazetteer.hpp"
#include "geoloc/eval/report.hpp"
#include "geoloc/gateway/batch.hpp"
#include "geoloc/gateway/prompt.hpp"
#include "geoloc/geo/road_network.hpp"
#include "geoloc/geo/sampler.hpp"
#include "geoloc/locatability/io.hpp"
#include "geoloc/util/text.hpp"

namespace geoloc::pipeline {
namespace {

namespace fs = std::filesystem;
using util::Json;

struct Input {
  std::string name;
  fs::path path;
  std::string producer;  // empty for config inputs
  std::string rel;       // artifact path relative to the output dir
};

struct Plan {
  std::vector<Input> inputs;
  Json params = Json::object();
  std::vector<std::string> outputs;
  std::function<void()> run;
};

const std::map<std::string, std::vector<std::string>, std::less<>>& output_table() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> table = {
      {"sample", {"samples.csv", "samples_report.json"}},
      {"weights", {"weights.json"}},
      {"score", {"scores.jsonl"}},
      {"curate", {"curated.json"}},
      {"clues", {"clues/kept.jsonl", "clues/dropped.jsonl", "clues/report.json"}},
      {"export-train", {"train/stage1.jsonl", "train/stage2.jsonl", "train/report.json"}},
      {"infer", {"predictions.jsonl"}},
      {"eval", {"eval/report.json", "eval/report.txt", "eval/report.csv"}},
      {"report", {"report/curves.csv", "report/ablation.txt", "report/ablation.csv"}},
  };
  return table;
}

std::string producer_of(std::string_view rel) {
  for (const auto& [stage, outs] : output_table()) {
    if (std::find(outs.begin(), outs.end(), rel) != outs.end()) return stage;
  }
  return {};
}

std::string doc(const Json& j) { return j.dump(2) + "\n"; }

class Planner {
 public:
  Planner(std::string_view stage, const PipelineConfig& cfg, const RunContext& ctx)
      : stage_(stage), cfg_(cfg), ctx_(ctx), out_(cfg.paths.output) {}

  Plan plan() {
    plan_.outputs = stage_outputs(stage_);
    if (stage_ == "sample") sample();
    else if (stage_ == "weights") weights();
    else if (stage_ == "score") score();
    else if (stage_ == "curate") curate();
    else if (stage_ == "clues") clues();
    else if (stage_ == "export-train") export_train();
    else if (stage_ == "infer") infer();
    else if (stage_ == "eval") evaluate();
    else if (stage_ == "report") report();
    else throw ValidationError(fmt::format("unknown stage '{}'", stage_));
    return std::move(plan_);
  }

 private:
  fs::path external(const char* key, const std::optional<fs::path>& p) {
    if (!p) {
      throw ValidationError(fmt::format("stage '{}' needs paths.{} in the config", stage_, key));
    }
    std::error_code ec;
    if (!fs::is_regular_file(*p, ec)) {
      throw ValidationError(
          fmt::format("stage '{}': paths.{} = '{}' does not exist", stage_, key, p->string()));
    }
    plan_.inputs.push_back({key, *p, "", ""});
    return *p;
  }

  std::optional<fs::path> optional_external(const char* key, const std::optional<fs::path>& p) {
    if (!p) return std::nullopt;
    return external(key, p);
  }

  fs::path artifact(const std::string& rel) {
    const fs::path p = out_ / rel;
    const std::string producer = producer_of(rel);
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
      throw StageError(fmt::format("stage '{}' needs {} which is missing; run the '{}' stage first",
                                   stage_, rel, producer));
    }
    plan_.inputs.push_back({rel, p, producer, rel});
    return p;
  }

  fs::path output(const std::string& rel) const { return out_ / rel; }

  void sample() {
    const fs::path roads = external("roads", cfg_.paths.roads);
    const double interval = cfg_.params.interval_m;
    const std::uint64_t seed = cfg_.params.seed;
    plan_.params = {{"interval_m", interval}, {"seed", seed}};
    plan_.run = [this, roads, interval, seed] {
      const geo::RoadNetwork net = geo::load_road_network(roads);
      auto samples = geo::sample_points(net, interval);
      geo::select_all_views(samples, seed);
      geo::export_samples_csv(samples, output("samples.csv"));
      util::write_text_file(output("samples_report.json"),
                            doc({{"polylines", net.polylines.size()},
                                 {"skipped_features", net.skipped_features},
                                 {"degenerate_lines", net.degenerate_lines},
                                 {"samples", samples.size()}}));
    };
  }

  void weights() {
    const fs::path emb = external("embeddings", cfg_.paths.embeddings);
    const double tau = cfg_.params.tau;
    const std::string schema_param = cfg_.params.label_schema_id;
    plan_.params = {{"tau", tau}, {"label_schema_id", schema_param}};
    plan_.run = [this, emb, tau, schema_param] {
      const auto records = loc::load_embeddings(emb);
      const loc::LabelSchema schema = loc::label_schema_of(records, schema_param);
      const std::string corpus_id = "clues-" + util::sha256_file(emb).substr(0, 12);
      const auto w = loc::build_weights(loc::vectors_of(records, loc::EmbeddingKind::kClue),
                                        loc::vectors_of(records, loc::EmbeddingKind::kLabel), tau,
                                        schema, corpus_id);
      loc::save_weights(w, output("weights.json"));
    };
  }

  void score() {
    const fs::path profiles = external("profiles", cfg_.paths.profiles);
    const fs::path weights = artifact("weights.json");
    plan_.run = [this, profiles, weights] {
      const auto scores =
          loc::score_profiles(loc::load_profiles(profiles), loc::load_weights(weights));
      util::write_text_file(output("scores.jsonl"), loc::scores_to_jsonl(scores));
    };
  }

  void curate() {
    const fs::path scores = artifact("scores.jsonl");
    const double threshold = cfg_.params.locatability_threshold;
    plan_.params = {{"locatability_threshold", threshold}};
    plan_.run = [this, scores, threshold] {
      const auto result = loc::filter_by_locatability(loc::load_scores(scores), threshold);
      util::write_text_file(output("curated.json"), doc(loc::curation_to_json(result)));
    };
  }

  std::unique_ptr<clues::Tagger> make_tagger() {
    const std::string& spec = cfg_.params.tagger;
    if (spec == "gazetteer") {
      const fs::path gaz = external("gazetteer", cfg_.paths.gazetteer);
      return std::make_unique<clues::GazetteerTagger>(eval::Gazetteer::load_csv(gaz));
    }
    if (spec.rfind("endpoint:", 0) == 0) {
      const std::string target = spec.substr(9);
      gateway::EndpointConfig ep;
      if (cfg_.endpoints.count(target) != 0 || cfg_.endpoint_errors.count(target) != 0) {
        ep = cfg_.endpoint(target);
        plan_.params["tagger_model"] = ep.model;
      } else {
        ep.name = "tagger";
        ep.base_url = target;
      }
      return std::make_unique<clues::EndpointTagger>(ep);
    }
    throw ValidationError(
        fmt::format("params.tagger must be 'gazetteer' or 'endpoint:<name|url>', got '{}'", spec));
  }

  void clues() {
    const fs::path clue_file = external("clues", cfg_.paths.clues);
    plan_.params = {{"tagger", cfg_.params.tagger}, {"tagger_retries", cfg_.params.tagger_retries}};
    std::shared_ptr<clues::Tagger> tagger = make_tagger();
    int parallel = 1;
    if (cfg_.params.tagger.rfind("endpoint:", 0) == 0) {
      auto it = cfg_.endpoints.find(cfg_.params.tagger.substr(9));
      if (it != cfg_.endpoints.end()) parallel = it->second.max_parallel;
    }
    const int retries = cfg_.params.tagger_retries;
    plan_.run = [this, clue_file, tagger, retries, parallel] {
      const auto ingest = clues::ingest_clues(clue_file);
      const auto filtered = clues::filter_geo_entities(ingest.records, *tagger, retries, parallel);
      std::string dropped;
      for (std::size_t i = 0; i < filtered.dropped.size(); ++i) {
        Json j = clues::clue_to_json(filtered.dropped[i]);
        j["cause"] = filtered.drop_causes[i].reason;
        dropped += util::jsonl_line(j);
      }
      util::write_text_file(output("clues/kept.jsonl"), clues::clues_to_jsonl(filtered.kept));
      util::write_text_file(output("clues/dropped.jsonl"), dropped);
      util::write_text_file(output("clues/report.json"),
                            doc({{"records", ingest.records.size()},
                                 {"duplicates", ingest.duplicates},
                                 {"rejections", clues::rejections_to_json(ingest.rejections)},
                                 {"kept", filtered.kept.size()},
                                 {"dropped", clues::skipped_to_json(filtered.drop_causes)}}));
    };
  }

  void export_train() {
    const fs::path kept = artifact("clues/kept.jsonl");
    const fs::path curated = artifact("curated.json");
    const fs::path geotags = external("geotags", cfg_.paths.geotags);
    plan_.run = [this, kept, curated, geotags] {
      const auto records = clues::ingest_clues(kept).records;
      const auto stage1 = clues::export_reasoning_corpus(records);

      const auto curation = loc::curation_from_json(Json::parse(util::read_text_file(curated)));
      const auto joined = clues::join_high_with_geotags(curation.high, clues::load_geotags(geotags));
      auto stage2 = clues::export_location_corpus(joined.images);
      stage2.skipped.insert(stage2.skipped.end(), joined.unmatched.begin(),
                            joined.unmatched.end());

      util::write_text_file(output("train/stage1.jsonl"), clues::examples_to_jsonl(stage1.examples));
      util::write_text_file(output("train/stage2.jsonl"), clues::examples_to_jsonl(stage2.examples));
      util::write_text_file(
          output("train/report.json"),
          doc({{"stage1", {{"input", records.size()},
                           {"exported", stage1.examples.size()},
                           {"skipped", clues::skipped_to_json(stage1.skipped)}}},
               {"stage2", {{"input", curation.high.size()},
                           {"exported", stage2.examples.size()},
                           {"skipped", clues::skipped_to_json(stage2.skipped)}}}}));
    };
  }

  void infer() {
    const fs::path manifest = external("manifest", cfg_.paths.manifest);
    if (cfg_.params.infer_endpoint.empty()) {
      throw ValidationError("stage 'infer' needs params.infer_endpoint in the config");
    }
    const gateway::EndpointConfig ep = cfg_.endpoint(cfg_.params.infer_endpoint);
    const std::string prompt = gateway::build_geoloc_prompt();
    // base_url is left out so a mock on a fresh port does not look like a change.
    plan_.params = {{"endpoint", ep.name}, {"model", ep.model}, {"prompt_sha256", util::sha256_hex(prompt)}};
    const std::string key =
        util::sha256_hex(util::sha256_file(manifest) + "\n" + ep.model + "\n" + prompt);
    const fs::path checkpoint = out_ / ".state" / fmt::format("infer-{}.jsonl", key.substr(0, 16));
    plan_.run = [this, manifest, ep, prompt, checkpoint] {
      const auto entries = gateway::load_manifest(manifest);
      gateway::BatchOptions opts;
      opts.checkpoint = checkpoint;
      opts.prompt = prompt;
      opts.should_stop = ctx_.should_stop;
      const auto result = gateway::batch_infer(entries, ep, opts);
      if (result.requests_issued > 0) {
        std::size_t transport = 0;
        for (const auto& r : result.records) {
          if (r.failure_cause == gateway::FailureCause::kTransport) ++transport;
        }
        if (transport >= result.requests_issued) {
          throw EndpointError(fmt::format(
              "endpoint '{}' failed every request of this run ({} of {}); rerun to retry them",
              ep.name, transport, result.requests_issued));
        }
      }
      if (!result.complete) {
        throw StageError(fmt::format("infer interrupted with {} of {} images done; rerun to resume",
                                     result.records.size(), entries.size()));
      }
      std::string lines;
      for (const auto& r : result.records) {
        lines += util::jsonl_line(gateway::prediction_to_json(r, false));
      }
      util::write_text_file(output("predictions.jsonl"), lines);
    };
  }

  void evaluate() {
    const fs::path preds = artifact("predictions.jsonl");
    const fs::path truth = external("truth", cfg_.paths.truth);
    const fs::path gaz = external("gazetteer", cfg_.paths.gazetteer);
    const auto aliases = optional_external("aliases", cfg_.paths.aliases);
    const auto thresholds = cfg_.params.thresholds_km;
    plan_.params = {{"thresholds_km", thresholds}};
    plan_.run = [this, preds, truth, gaz, aliases, thresholds] {
      std::vector<gateway::PredictionRecord> records;
      util::for_each_jsonl(preds, [&](std::size_t, const Json& j) {
        records.push_back(gateway::prediction_from_json(j));
      });
      eval::AliasTable alias_table;
      if (aliases) alias_table = eval::AliasTable::load_csv(*aliases);
      const auto gazetteer = eval::Gazetteer::load_csv(gaz, &alias_table);
      const auto report =
          eval::evaluate(records, eval::load_truth(truth), &gazetteer, thresholds, &alias_table);
      util::write_text_file(output("eval/report.json"), doc(eval::report_to_json(report)));
      util::write_text_file(output("eval/report.txt"), eval::report_to_text(report));
      util::write_text_file(output("eval/report.csv"), eval::report_to_csv(report));
    };
  }

  void report() {
    const fs::path profiles = external("profiles", cfg_.paths.profiles);
    const fs::path weights = artifact("weights.json");
    const fs::path eval_json = artifact("eval/report.json");
    std::vector<std::pair<std::string, fs::path>> extra;
    for (const auto& [name, path] : cfg_.ablation) {
      const std::string key = "ablation." + name;
      plan_.inputs.push_back({key, path, "", ""});
      std::error_code ec;
      if (!fs::is_regular_file(path, ec)) {
        throw ValidationError(
            fmt::format("stage 'report': {} = '{}' does not exist", key, path.string()));
      }
      extra.emplace_back(name, path);
    }
    const double bw = cfg_.params.curve_bin_width;
    plan_.params = {{"curve_bin_width", bw}};
    plan_.run = [this, profiles, weights, eval_json, extra, bw] {
      const auto w = loc::load_weights(weights);
      const auto profs = loc::load_profiles(profiles);
      const auto scores = loc::score_profiles(profs, w);
      const loc::LabelSchema schema{w.label_schema_id, w.labels};
      std::string curves = "label,bin_center,mean_score,count\n";
      for (const auto& label : w.labels) {
        const std::string csv =
            loc::curve_to_csv(loc::class_proportion_curve(profs, scores, schema, label, bw));
        for (const auto& line : util::split(csv, '\n')) {
          if (line.empty() || line.rfind("bin_center", 0) == 0) continue;
          curves += util::csv_field(label) + "," + line + "\n";
        }
      }
      util::write_text_file(output("report/curves.csv"), curves);

      std::vector<std::pair<std::string, eval::EvalReport>> runs;
      runs.emplace_back("this-run",
                        eval::report_from_json(Json::parse(util::read_text_file(eval_json))));
      for (const auto& [name, path] : extra) {
        runs.emplace_back(name, eval::report_from_json(Json::parse(util::read_text_file(path))));
      }
      const auto table = eval::ablation_report(runs);
      util::write_text_file(output("report/ablation.txt"), table.to_text());
      util::write_text_file(output("report/ablation.csv"), table.to_csv());
    };
  }

  std::string stage_;
  const PipelineConfig& cfg_;
  const RunContext& ctx_;
  fs::path out_;
  Plan plan_;
};

Json load_run_manifest(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return Json{{"stages", Json::object()}};
  const Json j = Json::parse(util::read_text_file(path), nullptr, false);
  // A damaged manifest only costs a rebuild.
  if (j.is_discarded() || !j.is_object() || !j.contains("stages") || !j["stages"].is_object()) {
    return Json{{"stages", Json::object()}};
  }
  return j;
}

Json hash_inputs(const std::vector<Input>& inputs) {
  Json arr = Json::array();
  for (const auto& in : inputs) {
    Json e{{"name", in.name}, {"sha256", util::sha256_file(in.path)}};
    if (!in.producer.empty()) {
      e["artifact"] = in.rel;
      e["producer"] = in.producer;
    } else {
      e["path"] = in.path.generic_string();
    }
    arr.push_back(std::move(e));
  }
  return arr;
}

bool outputs_intact(const Json& recorded, const fs::path& out) {
  if (!recorded.is_object()) return false;
  for (const auto& [rel, sha] : recorded.items()) {
    std::error_code ec;
    const fs::path p = out / rel;
    if (!fs::is_regular_file(p, ec) || util::sha256_file(p) != sha.get<std::string>()) {
      return false;
    }
  }
  return true;
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"sample", "weights", "score",
                                                 "curate", "clues",   "export-train",
                                                 "infer",  "eval",    "report"};
  return names;
}

std::vector<std::string> stage_outputs(std::string_view stage) {
  auto it = output_table().find(stage);
  if (it == output_table().end()) throw ValidationError(fmt::format("unknown stage '{}'", stage));
  return it->second;
}

StageRun run_stage(std::string_view stage, const PipelineConfig& config, const RunContext& ctx) {
  Planner planner(stage, config, ctx);
  Plan plan = planner.plan();
  const fs::path out = config.paths.output;
  const fs::path manifest_path = out / kRunManifestName;

  Json manifest = load_run_manifest(manifest_path);
  const Json inputs = hash_inputs(plan.inputs);
  const std::string name(stage);

  StageRun result;
  result.stage = name;
  const Json* previous = manifest["stages"].contains(name) ? &manifest["stages"][name] : nullptr;
  if (!ctx.force && previous != nullptr && previous->value("inputs", Json()) == inputs &&
      previous->value("params", Json()) == plan.params &&
      outputs_intact(previous->value("outputs", Json()), out)) {
    result.status = StageStatus::kSkipped;
    Json entry = *previous;
    entry["status"] = "skipped";
    result.entry = entry;
  } else {
    try {
      plan.run();
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(fmt::format("stage '{}' failed: {}", name, e.what()));
    }
    Json outputs = Json::object();
    for (const auto& rel : plan.outputs) outputs[rel] = util::sha256_file(out / rel);
    result.entry = {{"status", "ran"}, {"inputs", inputs}, {"params", plan.params},
                    {"outputs", outputs}};
  }
  manifest["stages"][name] = result.entry;
  util::write_text_file(manifest_path, doc(manifest));
  return result;
}

eval::EvalReport run_all(const PipelineConfig& config, const RunContext& ctx,
                         std::vector<StageRun>* runs) {
  config.require_complete();
  for (const auto& stage : stage_names()) {
    StageRun r = run_stage(stage, config, ctx);
    if (runs != nullptr) runs->push_back(std::move(r));
  }
  return eval::report_from_json(
      Json::parse(util::read_text_file(config.paths.output / "eval/report.json")));
}

std::vector<std::string> verify_run_manifest(const fs::path& output_dir) {
  std::vector<std::string> problems;
  const fs::path path = output_dir / kRunManifestName;
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return {"run manifest is missing"};
  const Json manifest = load_run_manifest(path);
  std::map<std::string, std::string> produced;  // artifact -> recorded hash
  for (const auto& [stage, entry] : manifest["stages"].items()) {
    const Json outputs = entry.value("outputs", Json::object());
    for (const auto& [rel, sha] : outputs.items()) {
      produced[rel] = sha.get<std::string>();
      const fs::path p = output_dir / rel;
      if (!fs::is_regular_file(p, ec)) {
        problems.push_back(fmt::format("{}: output {} is missing", stage, rel));
      } else if (util::sha256_file(p) != sha.get<std::string>()) {
        problems.push_back(fmt::format("{}: output {} changed since it was written", stage, rel));
      }
    }
  }
  for (const auto& [stage, entry] : manifest["stages"].items()) {
    for (const auto& in : entry.value("inputs", Json::array())) {
      if (!in.contains("artifact")) continue;
      const std::string rel = in["artifact"].get<std::string>();
      auto it = produced.find(rel);
      if (it == produced.end()) {
        problems.push_back(fmt::format("{}: input {} has no producing stage", stage, rel));
      } else if (it->second != in["sha256"].get<std::string>()) {
        problems.push_back(
            fmt::format("{}: input {} is stale relative to its producer", stage, rel));
      }
    }
  }
  return problems;
}

}  // namespace geoloc::pipeline
