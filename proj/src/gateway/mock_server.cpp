#include "geoloc/gateway/mock_server.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <httplib.h>

#include "geoloc/error.hpp"

namespace geoloc::gateway {
namespace {

using util::Json;

std::string chat_body(const std::string& content) {
  return Json{{"id", "mock"},
              {"object", "chat.completion"},
              {"choices", Json::array({Json{{"index", 0},
                                            {"message", Json{{"role", "assistant"},
                                                             {"content", content}}},
                                            {"finish_reason", "stop"}}})}}
      .dump();
}

std::vector<double> pseudo_vector(const std::string& text, std::size_t dim) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::mt19937_64 rng(h);
  std::vector<double> v(dim);
  for (auto& x : v) x = static_cast<double>(rng() >> 11) / 9007199254740992.0 - 0.5;
  return v;
}

}  // namespace

MockEndpoint::MockEndpoint(Json script) : script_(std::move(script)) {
  if (!script_.is_object()) throw ValidationError("mock script must be a JSON object");
  const Json rules = script_.value("chat", Json::object()).value("rules", Json::array());
  for (const Json& r : rules) remaining_failures_.push_back(r.value("fail_first", 0));
}

MockEndpoint::~MockEndpoint() { stop(); }

void MockEndpoint::reset_counters() {
  chat_requests_ = 0;
  embedding_requests_ = 0;
  entity_requests_ = 0;
}

MockEndpoint::Reply MockEndpoint::chat_reply(const std::string& body) {
  const Json chat = script_.value("chat", Json::object());
  const Json rules = chat.value("rules", Json::array());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Json& rule = rules[i];
    const std::string match = rule.value("match", "");
    if (match.empty() || body.find(match) == std::string::npos) continue;
    const int delay = rule.value("delay_ms", 0);
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (remaining_failures_[i] > 0) {
        --remaining_failures_[i];
        return {rule.value("fail_status", 500), R"({"error":"scripted failure"})", delay};
      }
    }
    const int status = rule.value("status", 200);
    if (status != 200) return {status, R"({"error":"scripted status"})", delay};
    return {200, chat_body(rule.value("content", "")), delay};
  }
  if (chat.contains("default")) {
    const Json& d = chat["default"];
    const int status = d.value("status", 200);
    if (status != 200) return {status, R"({"error":"scripted status"})", d.value("delay_ms", 0)};
    return {200, chat_body(d.value("content", "")), d.value("delay_ms", 0)};
  }
  return {404, R"({"error":"no scripted response"})", 0};
}

std::string MockEndpoint::embeddings_reply(const std::string& body, int& status) {
  const Json req = Json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.contains("input")) {
    status = 400;
    return R"({"error":"bad request"})";
  }
  const Json cfg = script_.value("embeddings", Json::object());
  const std::size_t dim = cfg.value("dimension", std::size_t{8});
  const Json vectors = cfg.value("vectors", Json::object());
  Json inputs = req["input"];
  if (inputs.is_string()) inputs = Json::array({inputs});
  Json data = Json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string text = inputs[i].is_string() ? inputs[i].get<std::string>() : inputs[i].dump();
    Json vec = vectors.contains(text) ? vectors[text] : Json(pseudo_vector(text, dim));
    data.push_back(Json{{"object", "embedding"}, {"index", i}, {"embedding", vec}});
  }
  status = 200;
  return Json{{"object", "list"}, {"data", data}}.dump();
}

std::string MockEndpoint::entities_reply(const std::string& body, int& status) {
  const Json req = Json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.contains("text") || !req["text"].is_string()) {
    status = 400;
    return R"({"error":"bad request"})";
  }
  const Json cfg = script_.value("entities", Json::object());
  if (cfg.value("status", 200) != 200) {
    status = cfg.value("status", 500);
    return R"({"error":"scripted status"})";
  }
  const std::string text = req["text"].get<std::string>();
  Json found = Json::array();
  for (const Json& place : cfg.value("places", Json::array())) {
    const std::string p = place.get<std::string>();
    if (!p.empty() && text.find(p) != std::string::npos) found.push_back(p);
  }
  status = 200;
  return Json{{"entities", found}}.dump();
}

void MockEndpoint::install_routes() {
  server_ = std::make_unique<httplib::Server>();
  server_->Post(R"(.*/v1/chat/completions)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  ++chat_requests_;
                  const Reply r = chat_reply(req.body);
                  if (r.delay_ms > 0) {
                    std::this_thread::sleep_for(std::chrono::milliseconds(r.delay_ms));
                  }
                  res.status = r.status;
                  res.set_content(r.body, "application/json");
                });
  server_->Post(R"(.*/v1/embeddings)", [this](const httplib::Request& req,
                                              httplib::Response& res) {
    ++embedding_requests_;
    int status = 200;
    res.set_content(embeddings_reply(req.body, status), "application/json");
    res.status = status;
  });
  server_->Post(R"(.*/v1/entities)", [this](const httplib::Request& req,
                                            httplib::Response& res) {
    ++entity_requests_;
    int status = 200;
    res.set_content(entities_reply(req.body, status), "application/json");
    res.status = status;
  });
  server_->Get("/mock/stats", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(Json{{"chat_requests", chat_requests()},
                         {"embedding_requests", embedding_requests()},
                         {"entity_requests", entity_requests()}}
                        .dump(),
                    "application/json");
  });
}

int MockEndpoint::start(int port) {
  install_routes();
  if (port == 0) {
    port_ = server_->bind_to_any_port("127.0.0.1");
  } else {
    port_ = server_->bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (port_ <= 0) throw EndpointError("mock endpoint could not bind a port");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockEndpoint::serve_forever(const std::string& host, int port) {
  install_routes();
  port_ = port;
  if (!server_->listen(host, port)) {
    throw EndpointError(fmt::format("mock endpoint could not listen on {}:{}", host, port));
  }
}

void MockEndpoint::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockEndpoint::base_url() const { return fmt::format("http://127.0.0.1:{}", port_); }

}  // namespace geoloc::gateway
