// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/util.hpp"

#include "condtraj/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace condtraj {

const char *to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::InsufficientData: return "insufficient data";
  case ErrorKind::InvalidInput: return "invalid input";
  case ErrorKind::InvalidArgument: return "invalid argument";
  case ErrorKind::Shape: return "shape mismatch";
  case ErrorKind::Spawn: return "spawn failure";
  case ErrorKind::Io: return "i/o error";
  case ErrorKind::Format: return "format error";
  case ErrorKind::Numerical: return "numerical failure";
  case ErrorKind::Usage: return "usage error";
  }
  return "error";
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view label) {
  // splitmix64 finalizer over the mixed label hash
  std::uint64_t z = fnv1a64(label) ^ (global_seed + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void append_double(std::string &out, double value) {
  if (value == 0.0) {
    // keeps -0.0 distinct so round trips stay bit-exact
    out += std::signbit(value) ? "-0.0" : "0";
    return;
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::Numerical, "cannot serialize non-finite value");
  }
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, res.ptr);
}

void append_array(std::string &out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    append_double(out, values[i]);
  }
  out += ']';
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

void ensure_directory(const std::string &path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory '" + path + "': " + ec.message());
}

} // namespace condtraj
