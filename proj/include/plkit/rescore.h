#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "plkit/decoder.h"
#include "plkit/lm.h"

namespace plkit {

struct RescoreWeights {
  double alpha1 = 0;
  double alpha2 = 0;
  // Per character of the transcript, spaces included.
  double beta = 0;

  void validate() const;
};

struct ScoredNBest {
  NBestEntry entry;
  // Natural-log sentence scores from the two external models.
  double lm1_log = 0;
  double lm2_log = 0;
};

// Per-hypothesis natural-log scores from a file: utt_id, rank, log_prob.
// Rank is the 0-based position of the hypothesis within its utterance.
class ExternalScores {
 public:
  static ExternalScores load(std::istream& in);
  static ExternalScores loadFile(const std::string& path);

  void set(const std::string& utt_id, int rank, double log_prob);
  // Throws Error naming (utt_id, rank) when absent.
  double at(const std::string& utt_id, int rank) const;
  std::size_t size() const { return scores_.size(); }

 private:
  std::map<std::pair<std::string, int>, double> scores_;
};

// In-process n-gram model, file-borne scores, or one constant for every entry.
using LmScoreSource = std::variant<const NGramModel*, const ExternalScores*, double>;

std::vector<ScoredNBest> attachScores(
    std::span<const NBestEntry> entries,
    const LmScoreSource& lm1,
    const LmScoreSource& lm2,
    bool sentence_markers = true);

double rescoreScore(const ScoredNBest& s, const RescoreWeights& w);

// Reorders each utterance's list by rescoreScore, best first; utterances keep
// their first-appearance order. Each entry's `score` is set to the new score.
std::vector<NBestEntry> rescore(std::span<const ScoredNBest> entries, const RescoreWeights& w);

} // namespace plkit
