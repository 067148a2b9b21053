#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "civ/service/service.hpp"

namespace httplib {
class Server;
}

namespace civ {

struct ServerOptions {
  std::chrono::milliseconds heartbeat{5000};
};

// HTTP/JSON binding of a Service. Run events are served as SSE at
// GET /sessions/{id}/runs/{run}/events.
class HttpServer {
 public:
  HttpServer(Service& service, ServerOptions options = {});
  ~HttpServer();

  // Returns the bound port; port 0 picks a free one. Throws std::runtime_error on failure.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

 private:
  void routes();

  Service& service_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace civ
