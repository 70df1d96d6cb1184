#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plkit/decoder.h"
#include "plkit/lexicon.h"
#include "plkit/lm.h"

namespace plkit {

struct ManifestRow {
  std::string utt_id;
  std::string path;
  std::optional<std::string> reference;
  std::optional<double> duration;

  bool operator==(const ManifestRow&) const = default;
};

// TSV rows: utt_id, path[, reference[, duration_s]]. Utterance ids are unique.
std::vector<ManifestRow> readManifest(std::istream& in);
std::vector<ManifestRow> readManifestFile(const std::string& path);
void writeManifest(const std::vector<ManifestRow>& rows, std::ostream& out);

struct TaggedManifest {
  std::string source;
  std::vector<ManifestRow> rows;
};

// Concatenates manifests in argument order; each output row carries its
// source tag as a fifth column. Duplicate ids across inputs are an error.
void mergeManifests(const std::vector<TaggedManifest>& inputs, std::ostream& out);

struct Interval {
  double start = 0;
  double end = 0;

  double length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

struct Chunk {
  double start = 0;
  double end = 0;
  std::vector<Interval> pieces;  // speech covered by this chunk

  double span() const { return end - start; }
};

inline constexpr double kDefaultMaxChunk = 36.0;

// Greedy packing of consecutive intervals into chunks of span <= max_chunk.
// Intervals longer than max_chunk are first cut at max_chunk boundaries.
std::vector<Chunk> chunkIntervals(const std::vector<Interval>& intervals, double max_chunk = kDefaultMaxChunk);
std::vector<Interval> readIntervals(std::istream& in);

// Everything needed to decode one manifest row.
struct DecodeSetup {
  const TokenInventory* inventory = nullptr;
  const LexiconTrie* trie = nullptr;  // CTC lexicon modes
  const NGramModel* lm = nullptr;
  DecodeOptions options;
};

// Row path is an emission matrix for CTC modes and greedy, a replay-scorer
// file for Seq2Seq modes.
DecodeResult decodeFile(const std::string& path, const std::string& utt_id, const DecodeSetup& setup);

struct PseudoLabelResult {
  std::vector<std::pair<std::string, std::string>> labels;  // sorted by utt_id
  std::vector<std::pair<std::string, std::string>> errors;  // utt_id, message
  std::vector<NBestEntry> nbest;                            // sorted by utt_id, then rank
};

// `root` prefixes relative row paths.
PseudoLabelResult pseudoLabel(const std::vector<ManifestRow>& manifest, const DecodeSetup& setup,
                              const std::string& root = "", int workers = 1);

void writeLabels(const PseudoLabelResult& r, std::ostream& out);

// Reads "utt_id<TAB>transcript" lines or bare transcripts into token lists.
std::vector<std::vector<std::string>> readTextCorpus(std::istream& in);
std::vector<std::vector<std::string>> readTextCorpusFile(const std::string& path);

std::string resolvePath(const std::string& root, const std::string& path);

} // namespace plkit
