#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace plkit {

using TokenId = int32_t;
using WordId = int32_t;

inline constexpr TokenId kNoToken = -1;

// Base class for every error the toolkit raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or stream.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Argument outside an operation's domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

std::vector<std::string> splitWhitespace(std::string_view s);
std::vector<std::string> splitChar(std::string_view s, char sep);
std::string_view trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Shortest decimal representation that parses back to the same double.
std::string formatDouble(double v);
// Strict parse: the whole field must be a finite number.
double parseDouble(std::string_view s, std::string_view what);
long long parseInt(std::string_view s, std::string_view what);

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8Length(std::string_view s);

// SplitMix64 step; used to derive independent sub-seeds from a master seed.
uint64_t mixSeed(uint64_t seed, uint64_t stream);

} // namespace plkit
