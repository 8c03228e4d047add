#ifndef CCP_ERROR_HPP
#define CCP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ccp {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kValidation,
  kIo,
  kDimension,
  kPrecondition,
  kInfeasibleStart,
  kBudget,
  kEngine,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// C API can map it to a stable status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ccp

#endif  // CCP_ERROR_HPP
