#include "geoloc/pipeline/config.hpp"

#include <cstdlib>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/util/io.hpp"
#include "geoloc/util/text.hpp"

namespace geoloc::pipeline {
namespace {

namespace pt = boost::property_tree;

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ValidationError(fmt::format("config {}: '{}' is not a number", key, v));
}

long long to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used == v.size()) return n;
  } catch (const std::exception&) {
  }
  throw ValidationError(fmt::format("config {}: '{}' is not an integer", key, v));
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(v, &used);
    if (used == v.size() && v.find('-') == std::string::npos) return n;
  } catch (const std::exception&) {
  }
  throw ValidationError(fmt::format("config {}: '{}' is not an unsigned integer", key, v));
}

}  // namespace

std::string interpolate_env(std::string_view value) {
  std::string out;
  for (std::size_t i = 0; i < value.size();) {
    if (value.compare(i, 2, "${") == 0) {
      const std::size_t close = value.find('}', i + 2);
      if (close == std::string_view::npos) {
        throw ValidationError(fmt::format("unterminated ${{ in '{}'", value));
      }
      const std::string name(value.substr(i + 2, close - i - 2));
      const char* env = std::getenv(name.c_str());
      if (env == nullptr) {
        throw ValidationError(fmt::format("environment variable {} is not set", name));
      }
      out += env;
      i = close + 1;
    } else {
      out += value[i++];
    }
  }
  return out;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  return from_text(util::read_text_file(path), path.parent_path(), path.string());
}

PipelineConfig PipelineConfig::from_text(std::string_view text,
                                         const std::filesystem::path& base_dir,
                                         std::string_view source) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(fmt::format("{}:{}: {}", source, e.line(), e.message()), 0, e.line());
  }

  PipelineConfig cfg;
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
  };

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ValidationError(fmt::format("{}: key '{}' outside any section", source, section));
    }
    for (const auto& [key, node] : body) {
      const std::string where = fmt::format("[{}] {}", section, key);
      const bool is_endpoint = section.rfind("endpoint.", 0) == 0;
      std::string value;
      try {
        value = util::trim(interpolate_env(node.data()));
      } catch (const ValidationError& e) {
        if (!is_endpoint) throw ValidationError(fmt::format("{}: {}: {}", source, where, e.what()));
        cfg.endpoint_errors.emplace(section.substr(9), fmt::format("{}: {}", where, e.what()));
        continue;
      }
      if (section == "paths") {
        auto& p = cfg.paths;
        if (value.empty()) continue;
        if (key == "roads") p.roads = resolve(value);
        else if (key == "profiles") p.profiles = resolve(value);
        else if (key == "embeddings") p.embeddings = resolve(value);
        else if (key == "clues") p.clues = resolve(value);
        else if (key == "geotags") p.geotags = resolve(value);
        else if (key == "manifest") p.manifest = resolve(value);
        else if (key == "gazetteer") p.gazetteer = resolve(value);
        else if (key == "aliases") p.aliases = resolve(value);
        else if (key == "truth") p.truth = resolve(value);
        else if (key == "output") p.output = resolve(value);
        else throw ValidationError(fmt::format("{}: unknown key {}", source, where));
      } else if (section == "params") {
        auto& p = cfg.params;
        if (key == "interval_m") p.interval_m = to_double(value, where);
        else if (key == "tau") p.tau = to_double(value, where);
        else if (key == "locatability_threshold") p.locatability_threshold = to_double(value, where);
        else if (key == "thresholds_km") {
          p.thresholds_km.clear();
          for (const auto& part : util::split(value, ',')) {
            p.thresholds_km.push_back(to_double(util::trim(part), where));
          }
        } else if (key == "seed") p.seed = to_u64(value, where);
        else if (key == "label_schema_id") p.label_schema_id = value;
        else if (key == "tagger") p.tagger = value;
        else if (key == "tagger_retries") p.tagger_retries = static_cast<int>(to_int(value, where));
        else if (key == "infer_endpoint") p.infer_endpoint = value;
        else if (key == "curve_bin_width") p.curve_bin_width = to_double(value, where);
        else throw ValidationError(fmt::format("{}: unknown key {}", source, where));
      } else if (section.rfind("endpoint.", 0) == 0) {
        const std::string name = section.substr(9);
        auto& e = cfg.endpoints[name];
        e.name = name;
        if (key == "base_url") e.base_url = value;
        else if (key == "token_env") e.token_env = value;
        else if (key == "model") e.model = value;
        else if (key == "timeout_s") e.timeout_s = to_double(value, where);
        else if (key == "max_retries") e.max_retries = static_cast<int>(to_int(value, where));
        else if (key == "max_parallel") e.max_parallel = static_cast<int>(to_int(value, where));
        else if (key == "requests_per_minute") e.requests_per_minute = to_double(value, where);
        else if (key == "backoff_initial_ms") e.backoff_initial_ms = to_double(value, where);
        else if (key == "backoff_max_ms") e.backoff_max_ms = to_double(value, where);
        else throw ValidationError(fmt::format("{}: unknown key {}", source, where));
      } else if (section == "ablation") {
        cfg.ablation[key] = resolve(value);
      } else {
        throw ValidationError(fmt::format("{}: unknown section [{}]", source, section));
      }
    }
  }

  const auto& p = cfg.params;
  if (!(p.interval_m > 0.0)) throw ValidationError("params.interval_m must be > 0");
  if (!(p.tau >= 0.0 && p.tau <= 1.0)) throw ValidationError("params.tau must lie in [0, 1]");
  if (!(p.locatability_threshold >= 0.0 && p.locatability_threshold <= 1.0)) {
    throw ValidationError("params.locatability_threshold must lie in [0, 1]");
  }
  if (p.thresholds_km.empty()) throw ValidationError("params.thresholds_km is empty");
  if (p.tagger_retries < 0) throw ValidationError("params.tagger_retries must be >= 0");
  if (!(p.curve_bin_width > 0.0 && p.curve_bin_width <= 1.0)) {
    throw ValidationError("params.curve_bin_width must lie in (0, 1]");
  }
  for (const auto& [name, e] : cfg.endpoints) {
    if (cfg.endpoint_errors.count(name) != 0) continue;
    try {
      e.validate();
    } catch (const ValidationError& err) {
      throw ValidationError(fmt::format("[endpoint.{}]: {}", name, err.what()));
    }
  }
  return cfg;
}

void PipelineConfig::require_complete() const {
  std::vector<std::string> missing;
  const std::pair<const char*, const std::optional<std::filesystem::path>*> required[] = {
      {"paths.roads", &paths.roads},         {"paths.profiles", &paths.profiles},
      {"paths.embeddings", &paths.embeddings}, {"paths.clues", &paths.clues},
      {"paths.geotags", &paths.geotags},     {"paths.manifest", &paths.manifest},
      {"paths.gazetteer", &paths.gazetteer}, {"paths.truth", &paths.truth},
  };
  for (const auto& [name, value] : required) {
    if (!value->has_value()) missing.emplace_back(name);
  }
  if (params.infer_endpoint.empty()) missing.emplace_back("params.infer_endpoint");
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("config is missing: " + list);
  }
  endpoint(params.infer_endpoint);
}

const gateway::EndpointConfig& PipelineConfig::endpoint(const std::string& name) const {
  if (auto err = endpoint_errors.find(name); err != endpoint_errors.end()) {
    throw ValidationError(err->second);
  }
  auto it = endpoints.find(name);
  if (it == endpoints.end()) {
    throw ValidationError(fmt::format("no [endpoint.{}] section in the config", name));
  }
  return it->second;
}

}  // namespace geoloc::pipeline
