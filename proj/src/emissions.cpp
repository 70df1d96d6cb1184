#include "plkit/emissions.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <random>
#include <sstream>

namespace plkit {

namespace {

constexpr std::string_view kMagic = "EMAT1\n";

uint32_t byteswap32(uint32_t x) {
  return (x >> 24) | ((x >> 8) & 0xFF00U) | ((x << 8) & 0xFF0000U) | (x << 24);
}

std::string formatFloat(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::tuple<int, int, bool> parseHeader(std::string_view line) {
  auto f = splitWhitespace(line);
  if (f.size() != 3) {
    throw FormatError("emissions header must be 'T V normalized'");
  }
  auto t = parseInt(f[0], "frame count");
  auto v = parseInt(f[1], "vocabulary size");
  auto n = parseInt(f[2], "normalized flag");
  if (t < 0 || v <= 0 || (n != 0 && n != 1)) {
    throw FormatError("emissions header out of range");
  }
  return {static_cast<int>(t), static_cast<int>(v), n == 1};
}

EmissionMatrix finish(int t, int v, std::vector<float> values, bool normalized) {
  for (float x : values) {
    if (std::isnan(x)) {
      throw FormatError("emissions contain NaN");
    }
  }
  try {
    EmissionMatrix m(t, v, std::move(values), normalized);
    m.validate();
    return m;
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

} // namespace

EmissionMatrix::EmissionMatrix(int frames, int vocab, std::vector<float> values, bool normalized)
    : frames_(frames), vocab_(vocab), values_(std::move(values)), normalized_(normalized) {
  if (frames < 0 || vocab <= 0) {
    throw InvalidArgument("emission dimensions must be T >= 0, V > 0");
  }
  if (values_.size() != static_cast<std::size_t>(frames) * static_cast<std::size_t>(vocab)) {
    throw InvalidArgument("emission payload does not match T x V");
  }
}

double logSumExp(std::span<const float> xs) {
  if (xs.empty()) {
    return -INFINITY;
  }
  double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) {
    return mx;
  }
  double s = 0;
  for (float x : xs) {
    s += std::exp(static_cast<double>(x) - mx);
  }
  return mx + std::log(s);
}

double logSumExp(std::span<const double> xs) {
  if (xs.empty()) {
    return -INFINITY;
  }
  double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) {
    return mx;
  }
  double s = 0;
  for (double x : xs) {
    s += std::exp(x - mx);
  }
  return mx + std::log(s);
}

void EmissionMatrix::validate() const {
  for (int t = 0; t < frames_; ++t) {
    auto r = row(t);
    for (float x : r) {
      if (!std::isfinite(x)) {
        throw InvalidArgument("non-finite emission value at frame " + std::to_string(t));
      }
    }
    if (normalized_) {
      double lse = logSumExp(r);
      if (std::abs(lse) > kNormalizationTolerance) {
        throw InvalidArgument(
            "frame " + std::to_string(t) + " is not normalized (log-sum-exp " + formatDouble(lse) + ")");
      }
    }
  }
}

void writeEmissions(const EmissionMatrix& m, std::ostream& out) {
  out << kMagic << m.frames() << ' ' << m.vocab() << ' ' << (m.normalized() ? 1 : 0) << '\n';
  std::vector<uint32_t> raw(m.values().size());
  std::memcpy(raw.data(), m.values().data(), raw.size() * sizeof(float));
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& x : raw) {
      x = byteswap32(x);
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(uint32_t)));
}

void writeEmissionsText(const EmissionMatrix& m, std::ostream& out) {
  out << m.frames() << ' ' << m.vocab() << ' ' << (m.normalized() ? 1 : 0) << '\n';
  for (int t = 0; t < m.frames(); ++t) {
    auto r = m.row(t);
    for (std::size_t v = 0; v < r.size(); ++v) {
      out << (v ? " " : "") << formatFloat(r[v]);
    }
    out << '\n';
  }
}

EmissionMatrix readEmissions(std::istream& in) {
  std::string head(kMagic.size(), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (head == kMagic) {
    std::string line;
    if (!std::getline(in, line)) {
      throw FormatError("emissions: missing header line");
    }
    auto [t, v, normalized] = parseHeader(line);
    std::size_t n = static_cast<std::size_t>(t) * static_cast<std::size_t>(v);
    std::vector<uint32_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(uint32_t)));
    if (static_cast<std::size_t>(in.gcount()) != n * sizeof(uint32_t)) {
      throw FormatError(
          "emissions: truncated payload (" + std::to_string(in.gcount()) + " of " + std::to_string(n * 4) + " bytes)");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw FormatError("emissions: trailing bytes after payload");
    }
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& x : raw) {
        x = byteswap32(x);
      }
    }
    std::vector<float> values(n);
    std::memcpy(values.data(), raw.data(), n * sizeof(float));
    return finish(t, v, std::move(values), normalized);
  }

  // Text twin.
  std::string rest(std::istreambuf_iterator<char>(in), {});
  std::string all = head + rest;
  std::istringstream text(all);
  std::string line;
  while (std::getline(text, line) && trim(line).empty()) {
  }
  if (trim(line).empty()) {
    throw FormatError("emissions: empty input");
  }
  auto [t, v, normalized] = parseHeader(line);
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(t) * static_cast<std::size_t>(v));
  int rows = 0;
  while (std::getline(text, line)) {
    auto fields = splitWhitespace(line);
    if (fields.empty()) {
      continue;
    }
    if (fields.size() != static_cast<std::size_t>(v)) {
      throw FormatError("emissions: row " + std::to_string(rows) + " has " + std::to_string(fields.size()) + " values, expected " + std::to_string(v));
    }
    for (const auto& f : fields) {
      if (f == "nan" || f == "NaN" || f == "-nan") {
        throw FormatError("emissions contain NaN");
      }
      values.push_back(static_cast<float>(parseDouble(f, "emission value")));
    }
    ++rows;
  }
  if (rows != t) {
    throw FormatError("emissions: expected " + std::to_string(t) + " rows, got " + std::to_string(rows));
  }
  return finish(t, v, std::move(values), normalized);
}

EmissionMatrix readEmissionsFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open emissions '" + path + "'");
  }
  return readEmissions(in);
}

void writeEmissionsFile(const EmissionMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write emissions '" + path + "'");
  }
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && std::string_view(path).substr(path.size() - suffix.size()) == suffix;
  };
  if (ends_with(".txt")) {
    writeEmissionsText(m, out);
  } else {
    writeEmissions(m, out);
  }
}

EmissionMatrix synthEmissions(
    std::span<const TokenId> transcript,
    const TokenInventory& inventory,
    double noise,
    int frames_per_token,
    uint64_t seed) {
  if (!(noise >= 0.0 && noise < 1.0)) {
    throw InvalidArgument("noise must be in [0, 1)");
  }
  if (frames_per_token < 2) {
    throw InvalidArgument("frames_per_token must be >= 2");
  }
  const auto vocab = static_cast<int>(inventory.size());
  if (vocab < 2) {
    throw InvalidArgument("inventory too small");
  }
  for (TokenId t : transcript) {
    if (t < 0 || t >= vocab || t == inventory.blank()) {
      throw InvalidArgument("transcript token outside inventory");
    }
  }
  std::vector<TokenId> targets;
  for (TokenId t : transcript) {
    targets.push_back(inventory.blank());
    for (int i = 1; i < frames_per_token; ++i) {
      targets.push_back(t);
    }
  }
  targets.push_back(inventory.blank());

  // Peak mass on the target; the rest spread evenly. Mixed with a random
  // distribution of weight `noise`.
  constexpr double kPeak = 0.97;
  const double rest = (1.0 - kPeak) / static_cast<double>(vocab - 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<float> values;
  values.reserve(targets.size() * static_cast<std::size_t>(vocab));
  std::vector<double> probs(static_cast<std::size_t>(vocab));
  for (TokenId target : targets) {
    double rsum = 0;
    for (auto& p : probs) {
      p = -std::log(1.0 - unif(rng));
      rsum += p;
    }
    for (int v = 0; v < vocab; ++v) {
      double base = v == target ? kPeak : rest;
      double p = (1.0 - noise) * base + noise * probs[static_cast<std::size_t>(v)] / rsum;
      probs[static_cast<std::size_t>(v)] = p;
    }
    double total = 0;
    for (double p : probs) {
      total += p;
    }
    for (double p : probs) {
      values.push_back(static_cast<float>(std::log(p / total)));
    }
  }
  return EmissionMatrix(static_cast<int>(targets.size()), vocab, std::move(values), true);
}

void ReplayScorer::set(std::vector<TokenId> prefix, std::vector<double> logprobs) {
  if (logprobs.size() != static_cast<std::size_t>(vocab_)) {
    throw InvalidArgument("replay row has " + std::to_string(logprobs.size()) + " values, expected " + std::to_string(vocab_));
  }
  for (double x : logprobs) {
    if (std::isnan(x)) {
      throw InvalidArgument("replay row contains NaN");
    }
  }
  double lse = logSumExp(std::span<const double>(logprobs));
  if (std::abs(lse) > kNormalizationTolerance) {
    throw InvalidArgument("replay row is not normalized (log-sum-exp " + formatDouble(lse) + ")");
  }
  rows_[std::move(prefix)] = std::move(logprobs);
}

std::vector<double> ReplayScorer::next(std::span<const TokenId> prefix) const {
  auto it = rows_.find(std::vector<TokenId>(prefix.begin(), prefix.end()));
  if (it != rows_.end()) {
    return it->second;
  }
  return std::vector<double>(static_cast<std::size_t>(vocab_), -std::log(static_cast<double>(vocab_)));
}

ReplayScorer ReplayScorer::load(std::istream& in, int vocab) {
  ReplayScorer scorer(vocab);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    auto bar = line.find('|');
    if (bar == std::string::npos) {
      throw FormatError("replay line " + std::to_string(line_no) + ": expected 'prefix|values'");
    }
    try {
      std::vector<TokenId> prefix;
      for (const auto& f : splitWhitespace(std::string_view(line).substr(0, bar))) {
        prefix.push_back(static_cast<TokenId>(parseInt(f, "prefix token id")));
      }
      std::vector<double> values;
      for (const auto& f : splitWhitespace(std::string_view(line).substr(bar + 1))) {
        if (f == "-inf") {
          values.push_back(-INFINITY);
        } else {
          values.push_back(parseDouble(f, "log-probability"));
        }
      }
      scorer.set(std::move(prefix), std::move(values));
    } catch (const Error& e) {
      throw FormatError("replay line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return scorer;
}

ReplayScorer ReplayScorer::loadFile(const std::string& path, int vocab) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open replay scorer '" + path + "'");
  }
  return load(in, vocab);
}

void ReplayScorer::save(std::ostream& out) const {
  for (const auto& [prefix, row] : rows_) {
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      out << (i ? " " : "") << prefix[i];
    }
    out << '|';
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? " " : "") << (std::isinf(row[i]) ? std::string("-inf") : formatDouble(row[i]));
    }
    out << '\n';
  }
}

} // namespace plkit
