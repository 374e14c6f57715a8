#pragma once

// Scriptable stand-in for the chat, embeddings, and entity-tagging
// services. Script shape (all sections optional):
//
//   {
//     "chat": {
//       "rules": [
//         {"match": "img01", "content": "{...}", "status": 200,
//          "fail_first": 2, "fail_status": 500, "delay_ms": 0}
//       ],
//       "default": {"content": "...", "status": 200}
//     },
//     "embeddings": {"dimension": 8, "vectors": {"some text": [..]}},
//     "entities": {"places": ["Chile", "Paris"]}
//   }
//
// A chat rule fires when `match` occurs anywhere in the request body; the
// first matching rule wins. `fail_first` answers that many hits with
// `fail_status` before succeeding. Unknown embedding texts get a
// deterministic pseudo-random vector. The tagger returns every listed place
// that occurs verbatim in the text.

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "geoloc/util/io.hpp"

namespace httplib {
class Server;
}

namespace geoloc::gateway {

class MockEndpoint {
 public:
  explicit MockEndpoint(util::Json script);
  ~MockEndpoint();

  MockEndpoint(const MockEndpoint&) = delete;
  MockEndpoint& operator=(const MockEndpoint&) = delete;

  /// Binds 127.0.0.1 (port 0 picks a free port) and serves on a background
  /// thread. Returns the bound port.
  int start(int port = 0);
  void stop();

  /// Blocks serving on the calling thread; used by the standalone binary.
  void serve_forever(const std::string& host, int port);

  std::string base_url() const;
  std::size_t chat_requests() const { return chat_requests_.load(); }
  std::size_t embedding_requests() const { return embedding_requests_.load(); }
  std::size_t entity_requests() const { return entity_requests_.load(); }
  void reset_counters();

 private:
  struct Reply {
    int status;
    std::string body;
    int delay_ms;
  };

  void install_routes();
  Reply chat_reply(const std::string& body);
  std::string embeddings_reply(const std::string& body, int& status);
  std::string entities_reply(const std::string& body, int& status);

  util::Json script_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::vector<int> remaining_failures_;
  std::atomic<std::size_t> chat_requests_{0};
  std::atomic<std::size_t> embedding_requests_{0};
  std::atomic<std::size_t> entity_requests_{0};
};

}  // namespace geoloc::gateway
