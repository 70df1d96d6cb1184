#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "plkit/common.h"
#include "plkit/lm.h"

namespace plkit {

struct WerBreakdown {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int ref_length = 0;
  double wer = 0;
  // Empty reference with a nonempty hypothesis: wer is +inf.
  bool infinite = false;

  int errors() const { return substitutions + deletions + insertions; }
  WerBreakdown& operator+=(const WerBreakdown& o);
};

// Minimum-edit alignment; among equal-cost alignments substitutions win.
WerBreakdown wer(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);

// Seeded Fisher-Yates permutation.
std::vector<std::string> shuffleTranscript(std::vector<std::string> words, uint64_t seed);

struct AlignmentSegment {
  std::string word;
  double start = 0;
  double duration = 0;

  double end() const { return start + duration; }
  bool operator==(const AlignmentSegment&) const = default;
};

struct SegmentShuffleOptions {
  double min_gap = 0.130;
  int max_words_per_segment = 6;
  uint64_t seed = 0;
};

struct SegmentShuffle {
  bool kept = false;
  std::vector<std::vector<AlignmentSegment>> segments;  // original order
  std::vector<double> split_times;                      // gap midpoints
  std::vector<std::size_t> order;                       // permutation of segments; empty when rejected

  std::vector<std::string> shuffledWords() const;
};

SegmentShuffle segmentShuffle(const std::vector<AlignmentSegment>& utterance, const SegmentShuffleOptions& options);

// Segment word count -> number of segments, over kept utterances.
std::map<std::size_t, std::size_t> segmentLengthHistogram(const std::vector<SegmentShuffle>& results);

struct ProbeResult {
  double ppl_original = 0;
  // Mean over trials.
  double ppl_shuffled = 0;
  std::vector<double> ppl_shuffled_trials;
  std::vector<double> original_log10;                // per sentence
  std::vector<std::vector<double>> shuffled_log10;   // [trial][sentence]
};

ProbeResult perplexityProbe(const NGramModel& lm, const std::vector<std::vector<std::string>>& corpus, uint64_t seed,
                            int trials = 1);

void writeProbeReport(const ProbeResult& r, std::ostream& out);

// TSV: utt_id, word, start_s, duration_s. Utterances keep first-appearance order.
std::vector<std::pair<std::string, std::vector<AlignmentSegment>>> readAlignments(std::istream& in);
std::vector<std::pair<std::string, std::vector<AlignmentSegment>>> readAlignmentsFile(const std::string& path);

} // namespace plkit
