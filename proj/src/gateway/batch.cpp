#include "geoloc/gateway/batch.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/gateway/prompt.hpp"
#include "geoloc/util/text.hpp"

namespace geoloc::gateway {
namespace {

// Serializes checkpoint appends from worker threads.
class CheckpointWriter {
 public:
  explicit CheckpointWriter(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path.parent_path(), ec);
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) {
      throw StageError(fmt::format("cannot open checkpoint '{}' for append", path.string()));
    }
  }

  void append(const PredictionRecord& record) {
    const std::string line = util::jsonl_line(prediction_to_json(record, true));
    std::lock_guard<std::mutex> lock(mu_);
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::vector<ManifestEntry> out;
  const std::string ext = util::to_lower_ascii(path.extension().string());
  if (ext == ".jsonl" || ext == ".ndjson") {
    util::for_each_jsonl(path, [&](std::size_t line, const util::Json& j) {
      if (!j.is_object() || !j.contains("image_id") || !j.contains("image_ref") ||
          !j["image_id"].is_string() || !j["image_ref"].is_string()) {
        throw ValidationError(fmt::format("{}:{}: manifest rows need string image_id and image_ref",
                                          path.string(), line));
      }
      out.push_back({j["image_id"].get<std::string>(), j["image_ref"].get<std::string>()});
    });
  } else {
    const std::string text = util::read_text_file(path);
    std::size_t line_no = 0;
    std::size_t id_col = 0;
    std::size_t ref_col = 1;
    for (const std::string& raw : util::split(text, '\n')) {
      ++line_no;
      if (util::trim(raw).empty()) continue;
      const auto fields = util::parse_csv_line(raw);
      if (line_no == 1) {
        bool found_id = false;
        bool found_ref = false;
        for (std::size_t k = 0; k < fields.size(); ++k) {
          const std::string h = util::trim(fields[k]);
          if (h == "image_id") id_col = k, found_id = true;
          if (h == "image_ref") ref_col = k, found_ref = true;
        }
        if (!found_id || !found_ref) {
          throw ValidationError(fmt::format(
              "{}: manifest CSV header must name image_id and image_ref", path.string()));
        }
        continue;
      }
      if (fields.size() <= std::max(id_col, ref_col)) {
        throw ValidationError(fmt::format("{}:{}: too few fields", path.string(), line_no));
      }
      out.push_back({util::trim(fields[id_col]), util::trim(fields[ref_col])});
    }
  }
  validate_manifest(out);
  return out;
}

void validate_manifest(const std::vector<ManifestEntry>& manifest) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest[i];
    if (e.image_id.empty()) {
      throw ValidationError(fmt::format("manifest row {} has an empty image_id", i + 1));
    }
    if (e.image_ref.empty()) {
      throw ValidationError(fmt::format("manifest image '{}' has no image_ref", e.image_id));
    }
    if (!seen.insert(e.image_id).second) {
      throw ValidationError(fmt::format("manifest repeats image_id '{}'", e.image_id));
    }
  }
}

std::vector<PredictionRecord> read_checkpoint(const std::filesystem::path& path) {
  std::vector<PredictionRecord> out;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return out;
  try {
    util::for_each_jsonl(path, [&](std::size_t, const util::Json& j) {
      out.push_back(prediction_from_json(j));
    });
  } catch (const Error& e) {
    throw StageError(fmt::format(
        "checkpoint '{}' is unreadable ({}); refusing to start. Repair or move it aside "
        "to re-run those images",
        path.string(), e.what()));
  }
  return out;
}

BatchResult batch_infer(const std::vector<ManifestEntry>& manifest,
                        const EndpointConfig& endpoint, const BatchOptions& options) {
  validate_manifest(manifest);
  endpoint.validate();
  if (options.checkpoint.empty()) throw ValidationError("batch_infer needs a checkpoint path");

  std::unordered_map<std::string, PredictionRecord> done;
  for (auto& r : read_checkpoint(options.checkpoint)) {
    if (options.retry_transport_failures && r.failure_cause == FailureCause::kTransport) {
      done.erase(r.image_id);
      continue;
    }
    done.insert_or_assign(r.image_id, std::move(r));
  }

  BatchResult result;
  std::vector<const ManifestEntry*> pending;
  for (const auto& e : manifest) {
    if (done.count(e.image_id) != 0) {
      ++result.resumed;
    } else {
      pending.push_back(&e);
    }
  }

  if (!pending.empty()) {
    const std::string prompt = options.prompt.empty() ? build_geoloc_prompt() : options.prompt;
    CheckpointWriter writer(options.checkpoint);
    RateLimiter limiter(endpoint.requests_per_minute);
    std::mutex results_mu;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> issued{0};
    std::mutex stop_mu;
    std::exception_ptr failure;

    auto worker = [&]() {
      try {
        while (true) {
          {
            std::lock_guard<std::mutex> lock(stop_mu);
            if (options.should_stop && options.should_stop()) return;
          }
          const std::size_t i = next.fetch_add(1);
          if (i >= pending.size()) return;
          const ManifestEntry& entry = *pending[i];
          ++issued;
          QueryResult q = query_model(endpoint, entry.image_ref, prompt, &limiter);
          PredictionRecord rec;
          if (q.ok) {
            rec = make_prediction(entry.image_id, std::move(q.raw_text), options.refusals);
          } else {
            rec.image_id = entry.image_id;
            rec.effective = false;
            rec.failure_cause = FailureCause::kTransport;
            rec.raw_text = q.error;
          }
          rec.latency_ms = q.latency_ms;
          rec.retry_count = q.retry_count;
          writer.append(rec);
          std::lock_guard<std::mutex> lock(results_mu);
          done.insert_or_assign(rec.image_id, std::move(rec));
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(results_mu);
        if (!failure) failure = std::current_exception();
      }
    };

    const auto threads = static_cast<std::size_t>(endpoint.max_parallel) < pending.size()
                             ? static_cast<std::size_t>(endpoint.max_parallel)
                             : pending.size();
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    result.requests_issued = issued.load();
  }

  result.complete = true;
  for (const auto& e : manifest) {
    auto it = done.find(e.image_id);
    if (it == done.end()) {
      result.complete = false;
      continue;
    }
    result.records.push_back(it->second);
  }
  return result;
}

}  // namespace geoloc::gateway
