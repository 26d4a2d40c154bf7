// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_ERROR_HPP
#define CONDTRAJ_ERROR_HPP

#include <stdexcept>
#include <string>

namespace condtraj {

enum class ErrorKind {
  InsufficientData,
  InvalidInput,
  InvalidArgument,
  Shape,
  Spawn,
  Io,
  Format,
  Numerical,
  Usage,
};

const char *to_string(ErrorKind kind);

// Single exception type for the library. The kind decides the C API status
// code (and therefore the CLI exit code).
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace condtraj

#endif // CONDTRAJ_ERROR_HPP
