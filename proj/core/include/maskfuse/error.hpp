#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace maskfuse {

enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kParse,
  kIo,
  kNotFound,
  kNoData,
};

std::string_view to_string(ErrorKind kind);

// Base for every error raised by the library. Callers that need to branch
// on the cause inspect kind(); the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Malformed input file. line() is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace maskfuse
