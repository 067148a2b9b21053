#include "civ/service/api_error.hpp"

#include <string_view>

#include "civ/error.hpp"

namespace civ {

const char* to_string(ApiCode c) {
  switch (c) {
    case ApiCode::invalid_stage: return "invalid_stage";
    case ApiCode::bad_request: return "bad_request";
    case ApiCode::not_found: return "not_found";
    case ApiCode::training_busy: return "training_busy";
    case ApiCode::internal: return "internal";
  }
  return "internal";
}

int http_status(ApiCode c) {
  switch (c) {
    case ApiCode::invalid_stage: return 409;
    case ApiCode::bad_request: return 400;
    case ApiCode::not_found: return 404;
    case ApiCode::training_busy: return 409;
    case ApiCode::internal: return 500;
  }
  return 500;
}

nlohmann::ordered_json ApiError::body() const {
  return {{"error", {{"code", to_string(code_)}, {"message", what()}, {"detail", detail_}}}};
}

ApiError to_api_error(const std::exception& e) {
  if (const auto* api = dynamic_cast<const ApiError*>(&e)) return *api;
  if (const auto* lib = dynamic_cast<const Error*>(&e)) {
    const std::string_view kind = lib->kind();
    if (kind == "not_found") return {ApiCode::not_found, e.what(), std::string(kind)};
    if (kind == "state") return {ApiCode::invalid_stage, e.what(), std::string(kind)};
    if (kind == "training") return {ApiCode::internal, e.what(), std::string(kind)};
    return {ApiCode::bad_request, e.what(), std::string(kind)};
  }
  if (dynamic_cast<const nlohmann::ordered_json::exception*>(&e) != nullptr) {
    return {ApiCode::bad_request, e.what(), "json"};
  }
  return {ApiCode::internal, e.what()};
}

}  // namespace civ
