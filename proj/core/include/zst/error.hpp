// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace zst {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (CLI exit code 1).
class ContractError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

class NumericError : public ContractError {
 public:
  using ContractError::ContractError;
};

class StateError : public ContractError {
 public:
  using ContractError::ContractError;
};

class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Bad bytes on disk or on the wire (CLI exit code 2).
class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class EncodingError : public IoError {
 public:
  EncodingError(const std::string& what, std::size_t byte_offset)
      : IoError(what + " at byte offset " + std::to_string(byte_offset)),
        offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class CompatibilityError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace zst
