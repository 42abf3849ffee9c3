#pragma once

#include <stdexcept>
#include <string>

namespace mintood {

// Every error carries the module that raised it; messages name the offending
// parameter or record so the CLI can report them verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

#define MINTOOD_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                        \
   public:                                                           \
    using Error::Error;                                              \
  };

MINTOOD_DEFINE_ERROR(ParameterError)
MINTOOD_DEFINE_ERROR(FormatError)
MINTOOD_DEFINE_ERROR(NumericalError)
MINTOOD_DEFINE_ERROR(InsufficientDataError)
MINTOOD_DEFINE_ERROR(GenerationError)
MINTOOD_DEFINE_ERROR(TrainingError)
MINTOOD_DEFINE_ERROR(UndefinedMetricError)
MINTOOD_DEFINE_ERROR(ContractError)
MINTOOD_DEFINE_ERROR(IoError)

#undef MINTOOD_DEFINE_ERROR

}  // namespace mintood
