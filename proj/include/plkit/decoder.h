#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "plkit/common.h"
#include "plkit/emissions.h"
#include "plkit/lexicon.h"
#include "plkit/lm.h"

namespace plkit {

enum class DecodeMode { kLexiconCtc, kLexfreeS2s, kZeroLmCtc, kZeroLmS2s, kGreedy };
enum class MergeRule { kLogAdd, kMax };

const char* toString(DecodeMode mode);
DecodeMode parseDecodeMode(std::string_view s);
const char* toString(MergeRule rule);
MergeRule parseMergeRule(std::string_view s);

inline constexpr int kDefaultMaxOutputLen = 512;

struct DecodeOptions {
  int beam = 500;
  int token_beam = 100;
  // Natural-log score gap below the best candidate of a step.
  double beam_threshold = 100.0;
  double lm_weight = 0.0;
  // Added once per completed word (lexicon CTC only).
  double word_insertion = 0.0;
  // Added, unscaled, when a Seq2Seq hypothesis emits EOS.
  double eos_penalty = 0.0;
  // A frame whose blank posterior exceeds this only extends with blank.
  double blank_threshold = 0.95;
  DecodeMode mode = DecodeMode::kLexiconCtc;
  // Seq2Seq step limit; <= 0 means kDefaultMaxOutputLen.
  int max_output_len = 0;
  int nbest = 1;
  MergeRule merge_rule = MergeRule::kLogAdd;
  // Score the LM end-of-sentence transition when a hypothesis ends.
  bool lm_end_transition = true;
  // Memoize LM continuation scores; results are identical either way.
  bool cache_lm_scores = true;
  // Word-piece prefix marking the start of a word.
  std::string word_boundary = std::string(kDefaultWordBoundary);

  // Throws InvalidArgument when an invariant is broken.
  void validate() const;
  bool isZeroLm() const { return mode == DecodeMode::kZeroLmCtc || mode == DecodeMode::kZeroLmS2s; }
  // lm_weight actually used in the search.
  double effectiveLmWeight() const { return isZeroLm() ? 0.0 : lm_weight; }
};

struct NBestEntry {
  std::string utt_id;
  std::vector<std::string> words;
  double am_score = 0;
  double lm_score_raw = 0;  // log10, unweighted
  int char_len = 0;
  // Decoder or rescoring score; not part of the base TSV columns.
  double score = 0;

  std::string transcript() const { return join(words, " "); }
  bool operator==(const NBestEntry&) const = default;
};

// Characters (code points) including single spaces between words.
int charLength(std::span<const std::string> words);

enum class DecodeStatus {
  kOk,
  // Lexicon has no words: only the empty transcript is reachable.
  kEmptyLexicon,
  // Seq2Seq search hit max_output_len without any finished hypothesis.
  kUnfinished,
};

struct DecodeResult {
  std::vector<NBestEntry> nbest;
  DecodeStatus status = DecodeStatus::kOk;
};

// Per-frame argmax, collapse repeats, drop blanks.
std::vector<TokenId> greedyCtc(const EmissionMatrix& emissions, const TokenInventory& inventory);

// Joins word pieces into words; a piece starting with `boundary` opens a new
// word. EOS and blank are skipped.
std::vector<std::string> piecesToWords(
    std::span<const TokenId> tokens, const TokenInventory& inventory, std::string_view boundary);

// Word sequences interned as a tree; each node caches its LM state and the
// accumulated unweighted LM score.
class WordHistory {
 public:
  using Id = int32_t;
  static constexpr Id kEmpty = 0;
  static constexpr Id kNone = -1;

  struct Node {
    Id parent;
    int32_t word;  // lexicon entry index, -1 at the root
    int32_t depth;
    LmState lm_state;
    double lm_raw;
  };

  explicit WordHistory(LmState start);
  // Child of `parent` by `word`; `make` yields (log10 score, next state) on first use.
  template <typename Make>
  Id extend(Id parent, int32_t word, Make&& make);
  // Existing child, or kNone.
  Id find(Id parent, int32_t word) const;
  const Node& node(Id id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::vector<int32_t> words(Id id) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  std::unordered_map<uint64_t, Id> children_;
};

template <typename Make>
WordHistory::Id WordHistory::extend(Id parent, int32_t word, Make&& make) {
  uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(parent)) << 32) | static_cast<uint32_t>(word);
  auto it = children_.find(key);
  if (it != children_.end()) {
    return it->second;
  }
  const Node& p = nodes_[static_cast<std::size_t>(parent)];
  auto [lp, next] = make(p.lm_state);
  Node n{parent, word, p.depth + 1, next, p.lm_raw + lp};
  auto id = static_cast<Id>(nodes_.size());
  nodes_.push_back(n);
  children_.emplace(key, id);
  return id;
}

// One lexicon-constrained CTC beam entry. Word history, LM state and LM
// score live in the shared WordHistory.
struct CtcHypothesis {
  LexiconTrie::NodeId trie_node = LexiconTrie::kRoot;
  WordHistory::Id history = WordHistory::kEmpty;
  // Label of the last frame (blank id after a blank), kNoToken at start.
  TokenId last_token = kNoToken;
  // Word completed this frame on top of `history`. Its history node is
  // created only if the hypothesis survives pruning.
  int32_t pending_word = -1;
  double am_score = 0;
  double score = 0;
};

// Frame-synchronous lexicon beam search over CTC emissions. The steps are
// public so tests can observe candidate generation and merging.
class CtcBeamSearch {
 public:
  CtcBeamSearch(
      const TokenInventory& inventory,
      const LexiconTrie& trie,
      const NGramModel* lm,
      const DecodeOptions& options);

  void reset();
  // Candidates for one frame, before merging and pruning.
  std::vector<CtcHypothesis> expand(std::span<const float> frame);
  // Collapses candidates sharing (trie node, word history, last token).
  void merge(std::vector<CtcHypothesis>& candidates, MergeRule rule);
  // Threshold and top-beam selection; survivors get their history nodes.
  void prune(std::vector<CtcHypothesis>& candidates);
  void step(std::span<const float> frame);
  DecodeResult finish() const;

  const std::vector<CtcHypothesis>& beam() const { return beam_; }
  const WordHistory& history() const { return history_; }
  double combined(double am_score, WordHistory::Id h) const;

 private:
  std::pair<double, LmState> lmTransition(const LmState& state, int32_t lexicon_word);
  static bool better(const CtcHypothesis& a, const CtcHypothesis& b);

  const TokenInventory& inventory_;
  const LexiconTrie& trie_;
  const NGramModel* lm_;
  DecodeOptions options_;
  double lm_scale_;  // alpha * ln(10)
  std::vector<WordId> lm_word_;  // lexicon entry -> LM vocabulary id
  WordHistory history_;
  std::vector<CtcHypothesis> beam_;
  std::vector<char> in_top_;
  std::vector<TokenId> top_;
  // Open-addressing scratch table for merge: slot -> candidate index + 1.
  std::vector<uint32_t> merge_slots_;

  struct CacheKeyHash {
    std::size_t operator()(const std::pair<LmState, WordId>& k) const noexcept {
      return LmStateHash{}(k.first) * 1000003u ^ static_cast<std::size_t>(k.second);
    }
  };
  std::unordered_map<std::pair<LmState, WordId>, TokenScore, CacheKeyHash> lm_cache_;
};

// Lexicon CTC decoding (modes lexicon_ctc, zerolm_ctc). `lm` may be null in
// zerolm_ctc; when given there it only annotates lm_score_raw.
DecodeResult decodeCtc(
    const EmissionMatrix& emissions,
    const TokenInventory& inventory,
    const LexiconTrie& trie,
    const NGramModel* lm,
    const DecodeOptions& options);

// Lexicon-free Seq2Seq decoding (modes lexfree_s2s, zerolm_s2s) with a
// word-piece LM.
DecodeResult decodeS2s(
    const SeqScorer& scorer,
    const TokenInventory& inventory,
    const NGramModel* lm,
    const DecodeOptions& options);

// N-best TSV: header, then utt_id, am_score, lm_score_raw, char_len,
// transcript. `with_score` appends the score column.
void dumpNBest(std::span<const NBestEntry> entries, std::ostream& out, bool with_score = false);
std::vector<NBestEntry> loadNBest(std::istream& in);

} // namespace plkit
