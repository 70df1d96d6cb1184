#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "plkit/common.h"

namespace plkit {

// Longest n-gram order the fixed-size keys can hold.
inline constexpr int kMaxLmOrder = 8;

inline constexpr std::string_view kSentenceBegin = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknownWord = "<unk>";

// Word strings <-> dense ids. Ids 0, 1, 2 are always <s>, </s>, <unk>.
class Vocabulary {
 public:
  Vocabulary();

  WordId add(std::string_view word);
  std::optional<WordId> find(std::string_view word) const;
  // Unknown strings map to unk().
  WordId index(std::string_view word) const;
  const std::string& word(WordId id) const { return words_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return words_.size(); }

  WordId bos() const { return 0; }
  WordId eos() const { return 1; }
  WordId unk() const { return 2; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

// Incremental scoring context: the last <= max_order - 1 words, oldest first.
struct LmState {
  std::array<WordId, kMaxLmOrder - 1> words{};
  uint8_t length = 0;

  std::span<const WordId> context() const { return {words.data(), length}; }
  bool operator==(const LmState& o) const {
    return length == o.length && std::equal(words.begin(), words.begin() + length, o.words.begin());
  }
};

struct LmStateHash {
  std::size_t operator()(const LmState& s) const noexcept;
};

struct TokenScore {
  double log10_prob = 0;
  LmState next;
  // Token had no unigram entry (or was <unk>); perplexity skips these events.
  bool oov = false;
  // Order of the n-gram that finally matched; 0 when the unknown floor was used.
  int matched_order = 0;
};

struct SentenceScore {
  double total_log10 = 0;
  int oov_count = 0;
  // Scored events, OOV ones included.
  int events = 0;
  // Sum restricted to in-vocabulary events.
  double known_log10 = 0;
};

enum class TokenUnit { kWord, kWordPiece };

const char* toString(TokenUnit unit);
TokenUnit parseTokenUnit(std::string_view s);

// Backoff n-gram language model with ARPA semantics. Immutable once built;
// concurrent readers need no locking.
class NGramModel {
 public:
  explicit NGramModel(int max_order, TokenUnit unit = TokenUnit::kWord);

  int maxOrder() const { return max_order_; }
  TokenUnit unit() const { return unit_; }
  void setUnit(TokenUnit unit) { unit_ = unit; }

  const Vocabulary& vocab() const { return vocab_; }
  WordId addWord(std::string_view w) { return vocab_.add(w); }

  double unknownFloor() const { return unk_floor_; }
  void setUnknownFloor(double log10_value) { unk_floor_ = log10_value; }

  // Adds or overwrites one entry. Order is ngram.size().
  void setEntry(std::span<const WordId> ngram, double log10_prob, double log10_backoff = 0.0);
  void setBackoff(std::span<const WordId> ngram, double log10_backoff);

  struct EntryView {
    std::span<const WordId> words;
    double log10_prob;
    double log10_backoff;
  };
  std::optional<EntryView> find(std::span<const WordId> ngram) const;
  bool contains(std::span<const WordId> ngram) const { return lookup(ngram) >= 0; }

  std::size_t entryCount(int order) const;
  std::size_t totalEntries() const;
  // Entries of one order in storage order.
  EntryView entry(int order, std::size_t i) const;

  LmState nullState() const { return {}; }
  LmState beginState() const;

  TokenScore score(const LmState& state, WordId token) const;
  // Backoff recursion over a literal context (any length; only the last
  // max_order - 1 words matter).
  double scoreContext(std::span<const WordId> context, WordId token) const;

  SentenceScore scoreSentence(std::span<const std::string> tokens, bool sentence_markers) const;

  // Throws FormatError when an ARPA invariant is violated.
  void validate() const;

 private:
  struct Key {
    std::array<WordId, kMaxLmOrder> words{};
    uint8_t length = 0;
    bool operator==(const Key& o) const {
      return length == o.length && std::equal(words.begin(), words.begin() + length, o.words.begin());
    }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  struct OrderTable {
    std::vector<WordId> words;  // order * count, flattened
    std::vector<double> prob;
    std::vector<double> backoff;
    std::unordered_map<Key, uint32_t, KeyHash> index;
  };

  static Key makeKey(std::span<const WordId> ngram);
  // Entry index within its order table, or -1.
  long lookup(std::span<const WordId> ngram) const;
  bool hasUnigram(WordId w) const;
  LmState shrink(std::span<const WordId> context) const;

  int max_order_;
  TokenUnit unit_;
  double unk_floor_ = -10.0;
  Vocabulary vocab_;
  std::vector<OrderTable> tables_;
  // Direct unigram index by word id; -1 when absent.
  std::vector<int32_t> unigram_;
};

NGramModel loadArpa(std::istream& in, TokenUnit unit = TokenUnit::kWord);
NGramModel loadArpaFile(const std::string& path, TokenUnit unit = TokenUnit::kWord);
void saveArpa(const NGramModel& model, std::ostream& out);

struct CorpusScore {
  double perplexity = 0;
  long long known_events = 0;
  long long oov_events = 0;
  std::vector<double> sentence_log10;  // per sentence, OOV events included
};

// 10^(-known_log10 / known_events); OOV events excluded from both sums. The
// event log-probabilities are summed in sorted order, so any permutation of
// the same events gives a bit-identical result.
CorpusScore scoreCorpus(
    const NGramModel& model,
    const std::vector<std::vector<std::string>>& corpus,
    bool sentence_markers = true);

double perplexity(
    const NGramModel& model,
    const std::vector<std::vector<std::string>>& corpus,
    bool sentence_markers = true);

struct TrainOptions {
  int max_order = 3;
  // Per order: n-grams with count <= threshold are dropped. Empty means none.
  std::vector<int> prune_thresholds;
  double discount = 0.75;
  TokenUnit unit = TokenUnit::kWord;
};

// Interpolated absolute discounting with a uniform floor at the unigram level.
NGramModel train(const std::vector<std::vector<std::string>>& corpus, const TrainOptions& options);

} // namespace plkit
