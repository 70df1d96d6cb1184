#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "plkit/common.h"

namespace plkit {

struct TitleRecord {
  std::string id;
  std::string raw;
  std::vector<std::string> words;  // normalized

  bool emptyTitle() const { return words.empty(); }
  static TitleRecord make(std::string id, std::string raw);
};

struct FuzzyMatchParams {
  double len_ratio = 0.75;
  double dist_ratio = 0.3;

  void validate() const;
};

// NFC, lowercase, whitespace split, keep letters and digits only, drop empties.
std::vector<std::string> normalizeTitle(std::string_view raw);

std::size_t wordLevenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct TitlePair {
  std::string left_id;
  std::string right_id;
  std::size_t distance = 0;
  double ratio = 0;  // distance / longer length

  bool operator==(const TitlePair&) const = default;
};

bool isFuzzyMatch(const std::vector<std::string>& a, const std::vector<std::string>& b, const FuzzyMatchParams& p,
                  std::size_t* distance = nullptr);

// Cross pairs with nonzero distance passing both length and distance tests,
// sorted by ratio, then ids.
std::vector<TitlePair> fuzzyCandidates(const std::vector<TitleRecord>& left, const std::vector<TitleRecord>& right,
                                       const FuzzyMatchParams& p, int workers = 1);

enum class Verdict { kRemove, kKeep };

struct PairVerdict {
  std::string left_id;
  std::string right_id;
  Verdict verdict = Verdict::kKeep;
};

struct FilterResult {
  std::set<std::string> kept;
  std::set<std::string> removed_by_id;
  std::set<std::string> removed_by_title;
  std::set<std::string> removed_by_verdict;
  std::vector<TitlePair> pending;

  std::set<std::string> removed() const;
};

// Left side is the LM corpus, right side the held-out books.
FilterResult filterCorpus(const std::vector<TitleRecord>& corpus, const std::vector<TitleRecord>& held_out,
                          const FuzzyMatchParams& p, const std::vector<PairVerdict>& verdicts = {}, int workers = 1);

// "id<TAB>raw title" per line.
std::vector<TitleRecord> readTitles(std::istream& in);
std::vector<TitleRecord> readTitlesFile(const std::string& path);
// "left_id<TAB>right_id<TAB>remove|keep" per line.
std::vector<PairVerdict> readVerdicts(std::istream& in);
std::vector<PairVerdict> readVerdictsFile(const std::string& path);
void writePending(const std::vector<TitlePair>& pending, const std::vector<TitleRecord>& corpus,
                  const std::vector<TitleRecord>& held_out, std::ostream& out);

} // namespace plkit
