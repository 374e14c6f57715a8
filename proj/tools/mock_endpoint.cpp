// geoloc-mock: serves a scripted chat/embeddings/entities endpoint for
// offline runs and tests.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geoloc/error.hpp"
#include "geoloc/gateway/mock_server.hpp"
#include "geoloc/util/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Scripted stand-in for the model endpoints", "geoloc-mock"};
  std::string script_path;
  std::string host = "127.0.0.1";
  int port = 8089;
  app.add_option("--script", script_path, "Mock script JSON")->required()->check(CLI::ExistingFile);
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port");
  CLI11_PARSE(app, argc, argv);

  try {
    geoloc::gateway::MockEndpoint mock(
        geoloc::util::Json::parse(geoloc::util::read_text_file(script_path)));
    std::cerr << "serving on http://" << host << ":" << port << "\n";
    mock.serve_forever(host, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
