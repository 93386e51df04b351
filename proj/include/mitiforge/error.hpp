#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mitiforge {

enum class ErrorCode {
  // vuln-ingest
  MalformedFeed,
  UnsupportedFormat,
  NetworkError,
  CacheMiss,
  HttpStatus,
  // mitigation-db
  EmptyText,
  BackendUnavailable,
  DimensionMismatch,
  InvalidVector,
  MalformedIndex,
  // behavior-classifier / generator replies
  MalformedReply,
  UnparseableReply,
  UnknownPrompt,
  // context-extractor
  ParseError,
  NoCallSite,
  FunctionNotFound,
  // strategy-catalog
  UnclassifiedType,
  InfoKindMismatch,
  MalformedCatalog,
  // mitigation-generator
  PromptTooLong,
  // adaptation-loop
  HarnessError,
  // cli / config
  InvalidConfig,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Non-2xx reply from a fetched reference or remote backend.
class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& url)
      : Error(ErrorCode::HttpStatus,
              "HTTP status " + std::to_string(status) + " for " + url),
        status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Syntax error with a position; offsets are 1-based lines/columns or a byte
/// offset for feed errors.
class PositionedError : public Error {
 public:
  PositionedError(ErrorCode code, const std::string& message, int line, int col,
                  std::size_t byte_offset = 0)
      : Error(code, message), line_(line), col_(col), byte_offset_(byte_offset) {}

  int line() const noexcept { return line_; }
  int col() const noexcept { return col_; }
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  int line_;
  int col_;
  std::size_t byte_offset_;
};

}  // namespace mitiforge
