// Shared small utilities: error types, string/TSV helpers, numeric formatting.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bioproc {

// Raised for malformed inputs: bad config keys, inconsistent data files,
// invalid model parameters. CLI maps this to exit code 3.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a solver backend misbehaves (bad external output, internal
// numerical failure, iteration blowup). CLI maps this to exit code 4.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& msg) : std::runtime_error(msg) {}
};

std::vector<std::string> split(const std::string& line, char delim);
std::string trim(const std::string& s);
bool starts_with(const std::string& s, const std::string& prefix);
std::string lower(const std::string& s);

// Parses a double/long with full-token validation; throws ValidationError
// mentioning `what` on garbage.
double parse_double(const std::string& tok, const std::string& what);
long parse_long(const std::string& tok, const std::string& what);

// Reads a whole text file; throws ValidationError if unreadable.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// TSV reader: skips blank lines and lines starting with '#'. Each row is the
// tab-split fields. First non-comment row is returned too (callers decide if
// it is a header).
std::vector<std::vector<std::string>> read_tsv(const std::string& path);

// Shortest decimal text that round-trips the double (%.17g fallback).
std::string format_double(double v);

// Deterministic 64-bit stream mixing (splitmix64 finalizer). Used to derive
// independent substream seeds from (seed, stream index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace bioproc
