#ifndef CASEFOLD_ERROR_H_
#define CASEFOLD_ERROR_H_

#include <stdexcept>
#include <string>

namespace casefold {

// Broad failure classes; the CLI maps each one to its exit code.
enum class ErrorClass { kUsage, kData, kNumeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass error_class, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message),
        error_class_(error_class),
        code_(std::move(code)) {}

  ErrorClass error_class() const { return error_class_; }
  // Stable machine-readable name, e.g. "MalformedLine".
  const std::string& code() const { return code_; }

 private:
  ErrorClass error_class_;
  std::string code_;
};

inline Error UsageError(std::string code, const std::string& message) {
  return Error(ErrorClass::kUsage, std::move(code), message);
}

inline Error DataError(std::string code, const std::string& message) {
  return Error(ErrorClass::kData, std::move(code), message);
}

inline Error NumericError(std::string code, const std::string& message) {
  return Error(ErrorClass::kNumeric, std::move(code), message);
}

}  // namespace casefold

#endif  // CASEFOLD_ERROR_H_
