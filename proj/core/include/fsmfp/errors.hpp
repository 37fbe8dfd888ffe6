#pragma once

#include <stdexcept>
#include <string>

namespace fsmfp {

/// Exit codes used by the CLI: 0 ok, 1 usage, 2 input format, 3 evaluation.
enum class ExitCode : int {
  ok = 0,
  usage = 1,
  format = 2,
  evaluation = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode exit_code() const { return code_; }

 private:
  ExitCode code_;
};

/// Bad configuration or arguments (empty salt, P < 1, gap <= 0, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::usage, what) {}
};

/// A caller violated an operation contract (empty group, size mismatch, ...).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(ExitCode::usage, what) {}
};

/// Unreadable or malformed input bytes (pcap header, record files, ...).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ExitCode::format, what) {}
};

/// Pcap link layer we do not decode; names the observed linktype.
class UnsupportedLinktypeError : public FormatError {
 public:
  explicit UnsupportedLinktypeError(unsigned linktype)
      : FormatError("unsupported pcap linktype " + std::to_string(linktype) +
                    " (expected 105 IEEE802_11 or 127 radiotap)"),
        linktype_(linktype) {}
  unsigned linktype() const { return linktype_; }

 private:
  unsigned linktype_;
};

/// Record file whose header tag does not match the expected schema.
class SchemaError : public FormatError {
 public:
  SchemaError(const std::string& expected, const std::string& found)
      : FormatError("schema mismatch: expected '" + expected + "', found '" + found + "'") {}
};

/// One record line failed to parse; carries the 1-based line number.
class RecordParseError : public FormatError {
 public:
  RecordParseError(std::size_t line, const std::string& what)
      : FormatError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Evaluation could not produce a result (no eligible targets, empty window).
class EvalError : public Error {
 public:
  explicit EvalError(const std::string& what) : Error(ExitCode::evaluation, what) {}
};

/// Requested model kind is not built into this binary.
class UnsupportedKindError : public ConfigError {
 public:
  explicit UnsupportedKindError(const std::string& kind)
      : ConfigError("unsupported-kind: " + kind) {}
};

/// I/O failure while writing a record file; names the path.
class StorageError : public Error {
 public:
  explicit StorageError(const std::string& what) : Error(ExitCode::format, what) {}
};

}  // namespace fsmfp
