#pragma once

#include <stdexcept>
#include <string>

namespace hybrid {

/// Base class of all errors raised by the library. The kind maps onto the
/// CLI exit codes (usage/parse = 1, validation = 2, resource limit = 3).
class Error : public std::runtime_error {
 public:
  enum class Kind { Argument, Parse, Validation, Limit };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& what) : Error(Kind::Argument, what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(Kind::Parse, what) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(Kind::Validation, what) {}
};

struct LimitError : Error {
  explicit LimitError(const std::string& what) : Error(Kind::Limit, what) {}
};

}  // namespace hybrid
