#pragma once

#include <stdexcept>
#include <string>

namespace civ {

// Root of every error the library throws. `kind()` is a stable machine-readable tag
// that the service layer maps onto API error codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

#define CIV_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(what) {}          \
    const char* kind() const noexcept override { return tag; }       \
  };

CIV_DEFINE_ERROR(ShapeError, "shape")
CIV_DEFINE_ERROR(ContractError, "contract")
CIV_DEFINE_ERROR(TrainingError, "training")
CIV_DEFINE_ERROR(DegenerateInputError, "degenerate_input")
CIV_DEFINE_ERROR(FormatError, "format")
CIV_DEFINE_ERROR(SchemaError, "schema")
CIV_DEFINE_ERROR(WorkflowError, "workflow")
CIV_DEFINE_ERROR(ConfigError, "config")
CIV_DEFINE_ERROR(NotFoundError, "not_found")
CIV_DEFINE_ERROR(StateError, "state")
CIV_DEFINE_ERROR(ImputationError, "imputation")

#undef CIV_DEFINE_ERROR

}  // namespace civ
