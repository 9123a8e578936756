#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace etfrp {

// Instance document does not match the schema. `path()` is a JSON pointer
// to the offending value ("/tau/0/1").
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// One or more instance invariants failed; every failure is listed.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> failures)
      : std::runtime_error(join(failures)), failures_(std::move(failures)) {}
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out = "invalid instance";
    for (const auto& s : items) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> failures_;
};

class GenerationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range request on the decision interface.
class ProtocolError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace etfrp
