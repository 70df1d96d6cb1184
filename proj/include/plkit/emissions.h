#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "plkit/common.h"
#include "plkit/lexicon.h"

namespace plkit {

// Tolerance on |log-sum-exp| of a normalized row.
inline constexpr double kNormalizationTolerance = 1e-3;

// T x V natural-log acoustic scores, row-major.
class EmissionMatrix {
 public:
  EmissionMatrix() = default;
  EmissionMatrix(int frames, int vocab, std::vector<float> values, bool normalized);

  int frames() const { return frames_; }
  int vocab() const { return vocab_; }
  bool normalized() const { return normalized_; }
  std::span<const float> row(int t) const {
    return {values_.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(vocab_), static_cast<std::size_t>(vocab_)};
  }
  float at(int t, int v) const { return values_[static_cast<std::size_t>(t) * static_cast<std::size_t>(vocab_) + static_cast<std::size_t>(v)]; }
  const std::vector<float>& values() const { return values_; }

  // Throws InvalidArgument on non-finite values or, when normalized, rows
  // whose log-sum-exp is off by more than kNormalizationTolerance.
  void validate() const;

  bool operator==(const EmissionMatrix&) const = default;

 private:
  int frames_ = 0;
  int vocab_ = 0;
  std::vector<float> values_;
  bool normalized_ = false;
};

double logSumExp(std::span<const float> xs);
double logSumExp(std::span<const double> xs);

// Binary EMAT: "EMAT1\n", "T V normalized\n", T*V little-endian float32.
void writeEmissions(const EmissionMatrix& m, std::ostream& out);
// Text twin: header line "T V normalized" then T whitespace-separated rows.
void writeEmissionsText(const EmissionMatrix& m, std::ostream& out);
// Accepts both the binary and the text format.
EmissionMatrix readEmissions(std::istream& in);
EmissionMatrix readEmissionsFile(const std::string& path);
void writeEmissionsFile(const EmissionMatrix& m, const std::string& path);

// Normalized emissions whose per-frame argmax spells `transcript` with
// blanks between tokens (exact under noise 0). Each token gets one blank
// frame followed by frames_per_token - 1 token frames; one trailing blank.
EmissionMatrix synthEmissions(
    std::span<const TokenId> transcript,
    const TokenInventory& inventory,
    double noise,
    int frames_per_token,
    uint64_t seed);

// Autoregressive next-token scorer: prefix excludes the implicit begin symbol.
class SeqScorer {
 public:
  virtual ~SeqScorer() = default;
  virtual int vocab() const = 0;
  // Natural-log distribution over the next token (EOS included).
  virtual std::vector<double> next(std::span<const TokenId> prefix) const = 0;
};

// Scripted scorer: "prefix-ids|v1 v2 ..." per line; unlisted prefixes get a
// uniform distribution.
class ReplayScorer final : public SeqScorer {
 public:
  explicit ReplayScorer(int vocab) : vocab_(vocab) {}

  static ReplayScorer load(std::istream& in, int vocab);
  static ReplayScorer loadFile(const std::string& path, int vocab);
  void save(std::ostream& out) const;

  void set(std::vector<TokenId> prefix, std::vector<double> logprobs);

  int vocab() const override { return vocab_; }
  std::vector<double> next(std::span<const TokenId> prefix) const override;

 private:
  int vocab_;
  std::map<std::vector<TokenId>, std::vector<double>> rows_;
};

} // namespace plkit
