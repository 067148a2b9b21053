#pragma once

#include <condition_variable>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "civ/clengine/serialize.hpp"
#include "civ/service/api_error.hpp"

namespace civ {

enum class Stage { specification, sampling, train, infer };

const char* to_string(Stage s);

// Server-sent event frames of one training run, appended by the worker.
class RunStream {
 public:
  void push(std::string frame);
  void finish(std::string frame);
  // Blocks until frame `index` exists, the stream is done, or the timeout passes.
  // Returns the frame, or nullopt when done (past the end) or timed out.
  std::optional<std::string> next(std::size_t index, std::chrono::milliseconds timeout, bool& done);
  std::vector<std::string> frames() const;
  bool done() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::string> frames_;
  bool done_ = false;
};

std::string sse_frame(const std::string& event, const Json& data);

using Query = std::map<std::string, std::string>;

struct ServiceOptions {
  std::optional<std::string> log_dir;       // checkpoint export directory
  std::optional<std::uint64_t> seed;        // overrides every configured seed
};

struct Session;

// Session registry and the workflow operations behind the HTTP routes. Every method
// throws ApiError; numeric payloads are the library results serialized as-is.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Json create_session(const Json& body);
  Json session_info(const std::string& id);
  Json feature_stats(const std::string& id);
  Json select_features(const std::string& id, const Json& body);
  Json embeddings(const std::string& id, const Query& query);
  Json set_negative(const std::string& id, const Json& body);
  Json get_positive(const std::string& id, const Query& query);
  Json set_positive(const std::string& id, const Json& body);
  Json start_training(const std::string& id, const Json& body);
  Json stop_training(const std::string& id);
  Json metrics(const std::string& id);
  std::shared_ptr<RunStream> stream(const std::string& id, std::uint64_t run_id);
  Json save_log(const std::string& id);
  Json list_logs(const std::string& id);
  Json switch_log(const std::string& id, std::uint64_t log_id);
  Json delete_log(const std::string& id, std::uint64_t log_id);
  Json infer(const std::string& id, const Json& body);

  // Blocks until the session has no running training worker.
  void wait_idle(const std::string& id);
  void stop_all();

 private:
  std::shared_ptr<Session> find(const std::string& id);

  ServiceOptions options_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 1;
};

}  // namespace civ
