#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xferlag {

enum class ErrorKind {
  InvalidArgument,
  Schema,
  Row,
  Parse,
  Precondition,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

// Header problems: missing, unknown or duplicated columns.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::string column)
      : Error(ErrorKind::Schema, what), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

// A data row that could not be decoded. row() is the 0-based data row index.
class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what)
      : Error(ErrorKind::Row, "row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string input)
      : Error(ErrorKind::Parse, what), input_(std::move(input)) {}
  const std::string& input() const noexcept { return input_; }

 private:
  std::string input_;
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(ErrorKind::Precondition, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace xferlag
