#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace civ {

enum class ApiCode { invalid_stage, bad_request, not_found, training_busy, internal };

const char* to_string(ApiCode c);
int http_status(ApiCode c);

class ApiError : public std::runtime_error {
 public:
  ApiError(ApiCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ApiCode code() const { return code_; }
  const std::string& detail() const { return detail_; }
  nlohmann::ordered_json body() const;

 private:
  ApiCode code_;
  std::string detail_;
};

// Maps library errors (civ::Error kinds) and anything else onto an ApiError.
ApiError to_api_error(const std::exception& e);

}  // namespace civ
