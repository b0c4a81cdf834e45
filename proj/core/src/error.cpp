#include "maskfuse/error.hpp"

#include <utility>

namespace maskfuse {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kNotFound: return "not found";
    case ErrorKind::kNoData: return "no data";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

namespace {
std::string located(const std::string& source, std::size_t line,
                    const std::string& what) {
  std::string out = source;
  if (line > 0) out += ":" + std::to_string(line);
  if (!out.empty()) out += ": ";
  return out + what;
}
}  // namespace

ParseError::ParseError(std::string source, std::size_t line,
                       const std::string& what)
    : Error(ErrorKind::kParse, located(source, line, what)),
      source_(std::move(source)),
      line_(line) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace maskfuse
