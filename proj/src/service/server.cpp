#include "civ/service/server.hpp"

#include <httplib.h>

namespace civ {

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    throw ApiError(ApiCode::bad_request, std::string("request body is not valid JSON: ") + e.what());
  }
}

Query query_of(const httplib::Request& req) {
  Query q;
  for (const auto& [k, v] : req.params) q[k] = v;
  return q;
}

std::uint64_t id_of(const std::string& text) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ApiError(ApiCode::not_found, "bad id '" + text + "'");
}

template <typename F>
httplib::Server::Handler handle(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, 200, f(req));
    } catch (const std::exception& e) {
      const ApiError err = to_api_error(e);
      reply(res, http_status(err.code()), err.body());
    }
  };
}

}  // namespace

HttpServer::HttpServer(Service& service, ServerOptions options)
    : service_(service), options_(options), server_(std::make_unique<httplib::Server>()) {
  routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::routes() {
  auto& s = *server_;
  Service& svc = service_;
  const std::string sid = R"(/sessions/([A-Za-z0-9]+))";

  s.Get("/health", handle([](const httplib::Request&) { return Json{{"status", "ok"}}; }));
  s.Post("/sessions", handle([&svc](const httplib::Request& r) { return svc.create_session(parse_body(r)); }));
  s.Get(sid, handle([&svc](const httplib::Request& r) { return svc.session_info(r.matches[1]); }));
  s.Get(sid + "/features", handle([&svc](const httplib::Request& r) { return svc.feature_stats(r.matches[1]); }));
  s.Post(sid + "/features",
         handle([&svc](const httplib::Request& r) { return svc.select_features(r.matches[1], parse_body(r)); }));
  s.Get(sid + "/embeddings",
        handle([&svc](const httplib::Request& r) { return svc.embeddings(r.matches[1], query_of(r)); }));
  s.Post(sid + "/negative",
         handle([&svc](const httplib::Request& r) { return svc.set_negative(r.matches[1], parse_body(r)); }));
  s.Get(sid + "/positive",
        handle([&svc](const httplib::Request& r) { return svc.get_positive(r.matches[1], query_of(r)); }));
  s.Post(sid + "/positive",
         handle([&svc](const httplib::Request& r) { return svc.set_positive(r.matches[1], parse_body(r)); }));
  s.Post(sid + "/train",
         handle([&svc](const httplib::Request& r) { return svc.start_training(r.matches[1], parse_body(r)); }));
  s.Post(sid + "/stop", handle([&svc](const httplib::Request& r) { return svc.stop_training(r.matches[1]); }));
  s.Get(sid + "/metrics", handle([&svc](const httplib::Request& r) { return svc.metrics(r.matches[1]); }));
  s.Post(sid + "/logs", handle([&svc](const httplib::Request& r) { return svc.save_log(r.matches[1]); }));
  s.Get(sid + "/logs", handle([&svc](const httplib::Request& r) { return svc.list_logs(r.matches[1]); }));
  s.Post(sid + R"(/logs/(\d+)/switch)",
         handle([&svc](const httplib::Request& r) { return svc.switch_log(r.matches[1], id_of(r.matches[2])); }));
  s.Delete(sid + R"(/logs/(\d+))",
           handle([&svc](const httplib::Request& r) { return svc.delete_log(r.matches[1], id_of(r.matches[2])); }));
  s.Post(sid + "/infer", handle([&svc](const httplib::Request& r) { return svc.infer(r.matches[1], parse_body(r)); }));

  const auto heartbeat = options_.heartbeat;
  s.Get(sid + R"(/runs/(\d+)/events)", [&svc, heartbeat](const httplib::Request& req, httplib::Response& res) {
    std::shared_ptr<RunStream> stream;
    try {
      stream = svc.stream(req.matches[1], id_of(req.matches[2]));
    } catch (const std::exception& e) {
      const ApiError err = to_api_error(e);
      reply(res, http_status(err.code()), err.body());
      return;
    }
    res.set_header("Cache-Control", "no-cache");
    auto index = std::make_shared<std::size_t>(0);
    res.set_chunked_content_provider("text/event-stream", [stream, index, heartbeat](std::size_t, httplib::DataSink& sink) {
      bool done = false;
      if (const auto frame = stream->next(*index, heartbeat, done)) {
        ++*index;
        return sink.write(frame->data(), frame->size());
      }
      if (done) {
        sink.done();
        return true;
      }
      static const std::string beat = ": heartbeat\n\n";
      return sink.write(beat.data(), beat.size());
    });
  });
}

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = server_->bind_to_any_port(host);
    if (p < 0) throw std::runtime_error("cannot bind " + host);
    return p;
  }
  if (!server_->bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace civ
