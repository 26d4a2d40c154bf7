// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_UTIL_HPP
#define CONDTRAJ_UTIL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace condtraj {

// Stable 64-bit FNV-1a; used for config hashes and seed labels, so it must
// not change between releases.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Every stochastic step seeds itself from (global seed, label).
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view label);

std::string hex64(std::uint64_t value);

// Shortest round-trip decimal representation of a double.
void append_double(std::string &out, double value);
void append_array(std::string &out, std::span<const double> values);

std::string read_file(const std::string &path);
void write_file(const std::string &path, std::string_view contents);
void ensure_directory(const std::string &path);

} // namespace condtraj

#endif // CONDTRAJ_UTIL_HPP
