#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rapidlog {

// Base of every error the library raises. The CLI maps Error -> exit code 2
// (data error) and ConfigError -> exit code 1 (usage).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

class ContractError : public Error {
  public:
    using Error::Error;
};

// Line numbers start at 1.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class RecordRejected : public Error {
  public:
    RecordRejected(std::size_t index, const std::string& what)
        : Error("record " + std::to_string(index) + " rejected: " + what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

  private:
    std::size_t index_;
};

// Binary file failures. Each condition has its own type so callers (and
// tests) can tell a stale file from a corrupted or cut-off one.
class FormatError : public Error {
  public:
    using Error::Error;
};

class VersionError : public FormatError {
  public:
    using FormatError::FormatError;
};

class ChecksumError : public FormatError {
  public:
    using FormatError::FormatError;
};

class DimensionError : public FormatError {
  public:
    using FormatError::FormatError;
};

class TruncationError : public FormatError {
  public:
    TruncationError(std::uint64_t offset, const std::string& what)
        : FormatError("truncated at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

  private:
    std::uint64_t offset_;
};

class CoverageError : public Error {
  public:
    CoverageError(std::vector<std::uint64_t> missing, const std::string& what)
        : Error(what), missing_(std::move(missing)) {}
    const std::vector<std::uint64_t>& missing() const noexcept { return missing_; }

  private:
    std::vector<std::uint64_t> missing_;
};

class AllocationError : public Error {
  public:
    explicit AllocationError(std::uint64_t seq_id)
        : Error("no score for seq_id " + std::to_string(seq_id)), seq_id_(seq_id) {}
    std::uint64_t seq_id() const noexcept { return seq_id_; }

  private:
    std::uint64_t seq_id_;
};

}  // namespace rapidlog
