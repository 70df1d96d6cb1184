#include "plkit/decoder.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

namespace plkit {

namespace {

double logAdd(double a, double b) {
  if (a < b) {
    std::swap(a, b);
  }
  if (b == -std::numeric_limits<double>::infinity()) {
    return a;
  }
  return a + std::log1p(std::exp(b - a));
}

// Indices of the `k` largest finite entries, best first, ties to the lower index.
template <typename T>
void topK(std::span<const T> scores, int k, TokenId skip, std::vector<TokenId>& out) {
  out.clear();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (static_cast<TokenId>(i) != skip && std::isfinite(static_cast<double>(scores[i]))) {
      out.push_back(static_cast<TokenId>(i));
    }
  }
  auto cmp = [&](TokenId a, TokenId b) {
    auto sa = scores[static_cast<std::size_t>(a)];
    auto sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  };
  auto keep = std::min<std::size_t>(out.size(), static_cast<std::size_t>(k));
  std::partial_sort(out.begin(), out.begin() + static_cast<long>(keep), out.end(), cmp);
  out.resize(keep);
}

void checkGranularity(const NGramModel* lm, TokenUnit want, std::string_view mode) {
  if (lm != nullptr && lm->unit() != want) {
    throw InvalidArgument(
        std::string("mode ") + std::string(mode) + " needs a " + toString(want) + "-level LM, got " +
        toString(lm->unit()));
  }
}

} // namespace

const char* toString(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kLexiconCtc:
      return "lexicon_ctc";
    case DecodeMode::kLexfreeS2s:
      return "lexfree_s2s";
    case DecodeMode::kZeroLmCtc:
      return "zerolm_ctc";
    case DecodeMode::kZeroLmS2s:
      return "zerolm_s2s";
    case DecodeMode::kGreedy:
      return "greedy";
  }
  return "?";
}

DecodeMode parseDecodeMode(std::string_view s) {
  for (auto m : {DecodeMode::kLexiconCtc, DecodeMode::kLexfreeS2s, DecodeMode::kZeroLmCtc, DecodeMode::kZeroLmS2s,
                 DecodeMode::kGreedy}) {
    if (s == toString(m)) {
      return m;
    }
  }
  throw InvalidArgument("unknown decode mode '" + std::string(s) + "'");
}

const char* toString(MergeRule rule) {
  return rule == MergeRule::kLogAdd ? "logadd" : "max";
}

MergeRule parseMergeRule(std::string_view s) {
  if (s == "logadd") {
    return MergeRule::kLogAdd;
  }
  if (s == "max") {
    return MergeRule::kMax;
  }
  throw InvalidArgument("unknown merge rule '" + std::string(s) + "'");
}

void DecodeOptions::validate() const {
  if (beam < 1) {
    throw InvalidArgument("beam must be >= 1");
  }
  if (token_beam < 1) {
    throw InvalidArgument("token_beam must be >= 1");
  }
  if (!(blank_threshold > 0.0 && blank_threshold <= 1.0)) {
    throw InvalidArgument("blank_threshold must be in (0, 1]");
  }
  if (nbest < 1 || nbest > beam) {
    throw InvalidArgument("nbest must be in [1, beam]");
  }
  if (std::isnan(beam_threshold) || beam_threshold < 0) {
    throw InvalidArgument("beam_threshold must be >= 0");
  }
  if (!std::isfinite(lm_weight) || !std::isfinite(word_insertion) || !std::isfinite(eos_penalty)) {
    throw InvalidArgument("decoder weights must be finite");
  }
}

int charLength(std::span<const std::string> words) {
  if (words.empty()) {
    return 0;
  }
  std::size_t n = words.size() - 1;
  for (const auto& w : words) {
    n += utf8Length(w);
  }
  return static_cast<int>(n);
}

std::vector<TokenId> greedyCtc(const EmissionMatrix& emissions, const TokenInventory& inventory) {
  if (static_cast<std::size_t>(emissions.vocab()) != inventory.size()) {
    throw InvalidArgument(
        "emission width " + std::to_string(emissions.vocab()) + " does not match inventory size " +
        std::to_string(inventory.size()));
  }
  std::vector<TokenId> out;
  TokenId prev = kNoToken;
  for (int t = 0; t < emissions.frames(); ++t) {
    auto row = emissions.row(t);
    auto best = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best != prev && best != inventory.blank()) {
      out.push_back(best);
    }
    prev = best;
  }
  return out;
}

std::vector<std::string> piecesToWords(
    std::span<const TokenId> tokens, const TokenInventory& inventory, std::string_view boundary) {
  std::vector<std::string> words;
  for (TokenId t : tokens) {
    if (t == inventory.eos() || t == inventory.blank()) {
      continue;
    }
    std::string_view piece = inventory.token(t);
    bool starts = !boundary.empty() && piece.substr(0, boundary.size()) == boundary;
    if (starts) {
      piece.remove_prefix(boundary.size());
    }
    if (starts || words.empty()) {
      words.emplace_back();
    }
    words.back() += piece;
  }
  std::erase_if(words, [](const std::string& w) { return w.empty(); });
  return words;
}

WordHistory::WordHistory(LmState start) {
  nodes_.push_back({-1, -1, 0, start, 0.0});
}

WordHistory::Id WordHistory::find(Id parent, int32_t word) const {
  uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(parent)) << 32) | static_cast<uint32_t>(word);
  auto it = children_.find(key);
  return it == children_.end() ? kNone : it->second;
}

std::vector<int32_t> WordHistory::words(Id id) const {
  std::vector<int32_t> out;
  while (id != kEmpty) {
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    out.push_back(n.word);
    id = n.parent;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Lexicon CTC

CtcBeamSearch::CtcBeamSearch(
    const TokenInventory& inventory,
    const LexiconTrie& trie,
    const NGramModel* lm,
    const DecodeOptions& options)
    : inventory_(inventory),
      trie_(trie),
      lm_(lm),
      options_(options),
      lm_scale_(options.effectiveLmWeight() * std::numbers::ln10),
      history_(lm ? lm->beginState() : LmState{}),
      in_top_(inventory.size(), 0) {
  const auto& lex = trie.lexicon();
  lm_word_.reserve(lex.size());
  for (const auto& e : lex.entries()) {
    lm_word_.push_back(lm ? lm->vocab().index(e.word) : -1);
  }
  reset();
}

void CtcBeamSearch::reset() {
  history_ = WordHistory(lm_ ? lm_->beginState() : LmState{});
  lm_cache_.clear();
  beam_.assign(1, CtcHypothesis{});
  beam_[0].score = combined(0.0, WordHistory::kEmpty);
}

double CtcBeamSearch::combined(double am_score, WordHistory::Id h) const {
  const auto& n = history_.node(h);
  return am_score + lm_scale_ * n.lm_raw + options_.word_insertion * n.depth;
}

std::pair<double, LmState> CtcBeamSearch::lmTransition(const LmState& state, int32_t lexicon_word) {
  if (lm_ == nullptr) {
    return {0.0, state};
  }
  WordId id = lm_word_[static_cast<std::size_t>(lexicon_word)];
  if (!options_.cache_lm_scores) {
    auto ts = lm_->score(state, id);
    return {ts.log10_prob, ts.next};
  }
  auto key = std::make_pair(state, id);
  auto it = lm_cache_.find(key);
  if (it == lm_cache_.end()) {
    it = lm_cache_.emplace(key, lm_->score(state, id)).first;
  }
  return {it->second.log10_prob, it->second.next};
}

bool CtcBeamSearch::better(const CtcHypothesis& a, const CtcHypothesis& b) {
  if (a.score != b.score) {
    return a.score > b.score;
  }
  if (a.history != b.history) {
    return a.history < b.history;
  }
  if (a.pending_word != b.pending_word) {
    return a.pending_word < b.pending_word;
  }
  if (a.trie_node != b.trie_node) {
    return a.trie_node < b.trie_node;
  }
  return a.last_token < b.last_token;
}

std::vector<CtcHypothesis> CtcBeamSearch::expand(std::span<const float> frame) {
  const TokenId blank = inventory_.blank();
  const double blank_lp = frame[static_cast<std::size_t>(blank)];
  const bool only_blank = std::exp(blank_lp) > options_.blank_threshold;

  if (!only_blank) {
    for (TokenId t : top_) {
      in_top_[static_cast<std::size_t>(t)] = 0;
    }
    topK(frame, options_.token_beam, blank, top_);
    for (TokenId t : top_) {
      in_top_[static_cast<std::size_t>(t)] = 1;
    }
  }

  std::vector<CtcHypothesis> out;
  out.reserve(beam_.size() * (only_blank ? 1 : 2 + top_.size() / 4));
  auto push = [&](LexiconTrie::NodeId node, WordHistory::Id h, TokenId last, double am) {
    out.push_back({node, h, last, -1, am, combined(am, h)});
  };

  for (const auto& hyp : beam_) {
    push(hyp.trie_node, hyp.history, blank, hyp.am_score + blank_lp);
    if (only_blank) {
      continue;
    }
    if (hyp.last_token != kNoToken && hyp.last_token != blank) {
      push(hyp.trie_node, hyp.history, hyp.last_token, hyp.am_score + frame[static_cast<std::size_t>(hyp.last_token)]);
    }
    auto visit = [&](TokenId t, LexiconTrie::NodeId child) {
      // Same label again without a blank in between is the repeat above.
      if (t == hyp.last_token) {
        return;
      }
      double am = hyp.am_score + frame[static_cast<std::size_t>(t)];
      const auto& cn = trie_.node(child);
      if (!cn.children.empty()) {
        push(child, hyp.history, t, am);
      }
      for (int32_t w : cn.words) {
        auto h = history_.find(hyp.history, w);
        if (h != WordHistory::kNone) {
          push(LexiconTrie::kRoot, h, t, am);
          continue;
        }
        const auto& parent = history_.node(hyp.history);
        double lm_raw = parent.lm_raw + lmTransition(parent.lm_state, w).first;
        double score = am + lm_scale_ * lm_raw + options_.word_insertion * (parent.depth + 1);
        out.push_back({LexiconTrie::kRoot, hyp.history, t, w, am, score});
      }
    };
    const auto& kids = trie_.node(hyp.trie_node).children;
    if (kids.size() <= top_.size()) {
      for (const auto& [t, child] : kids) {
        if (in_top_[static_cast<std::size_t>(t)]) {
          visit(t, child);
        }
      }
    } else {
      for (TokenId t : top_) {
        auto child = trie_.child(hyp.trie_node, t);
        if (child != LexiconTrie::kNone) {
          visit(t, child);
        }
      }
    }
  }
  return out;
}

void CtcBeamSearch::merge(std::vector<CtcHypothesis>& candidates, MergeRule rule) {
  auto hash = [](const CtcHypothesis& c) {
    uint64_t h = static_cast<uint32_t>(c.trie_node);
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<uint32_t>(c.history);
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<uint32_t>(c.pending_word);
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<uint32_t>(c.last_token);
    return h ^ (h >> 29);
  };
  auto same = [](const CtcHypothesis& a, const CtcHypothesis& b) {
    return a.trie_node == b.trie_node && a.history == b.history && a.pending_word == b.pending_word &&
           a.last_token == b.last_token;
  };
  std::size_t cap = 16;
  while (cap < candidates.size() * 2) {
    cap <<= 1;
  }
  merge_slots_.assign(cap, 0);
  const std::size_t mask = cap - 1;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = candidates[i];
    std::size_t slot = hash(c) & mask;
    while (merge_slots_[slot] != 0 && !same(candidates[merge_slots_[slot] - 1], c)) {
      slot = (slot + 1) & mask;
    }
    if (merge_slots_[slot] == 0) {
      merge_slots_[slot] = static_cast<uint32_t>(kept + 1);
      candidates[kept++] = c;
      continue;
    }
    auto& into = candidates[merge_slots_[slot] - 1];
    if (rule == MergeRule::kLogAdd) {
      into.am_score = logAdd(into.am_score, c.am_score);
      into.score = logAdd(into.score, c.score);
    } else if (c.score > into.score) {
      into.am_score = c.am_score;
      into.score = c.score;
    }
  }
  candidates.resize(kept);
}

void CtcBeamSearch::prune(std::vector<CtcHypothesis>& candidates) {
  if (candidates.empty()) {
    return;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    best = std::max(best, c.score);
  }
  const double floor = best - options_.beam_threshold;
  std::erase_if(candidates, [floor](const CtcHypothesis& c) { return c.score < floor; });
  auto keep = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(options_.beam));
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep), candidates.end(), better);
  candidates.resize(keep);
  for (auto& c : candidates) {
    if (c.pending_word >= 0) {
      int32_t w = c.pending_word;
      c.history = history_.extend(c.history, w, [&](const LmState& s) { return lmTransition(s, w); });
      c.pending_word = -1;
    }
  }
}

void CtcBeamSearch::step(std::span<const float> frame) {
  auto candidates = expand(frame);
  merge(candidates, options_.merge_rule);
  prune(candidates);
  beam_ = std::move(candidates);
}

DecodeResult CtcBeamSearch::finish() const {
  // Pending partial words are dropped; hypotheses then collapse by word history.
  std::map<WordHistory::Id, double> by_history;
  for (const auto& hyp : beam_) {
    auto [it, inserted] = by_history.emplace(hyp.history, hyp.am_score);
    if (!inserted) {
      it->second = options_.merge_rule == MergeRule::kLogAdd ? logAdd(it->second, hyp.am_score)
                                                             : std::max(it->second, hyp.am_score);
    }
  }
  const auto& lex = trie_.lexicon();
  DecodeResult result;
  for (const auto& [h, am] : by_history) {
    const auto& node = history_.node(h);
    NBestEntry e;
    for (int32_t w : history_.words(h)) {
      e.words.push_back(lex.entry(static_cast<std::size_t>(w)).word);
    }
    e.am_score = am;
    e.lm_score_raw = node.lm_raw;
    if (lm_ != nullptr && options_.lm_end_transition) {
      e.lm_score_raw += lm_->score(node.lm_state, lm_->vocab().eos()).log10_prob;
    }
    e.char_len = charLength(e.words);
    e.score = am + lm_scale_ * e.lm_score_raw + options_.word_insertion * node.depth;
    result.nbest.push_back(std::move(e));
  }
  std::sort(result.nbest.begin(), result.nbest.end(), [](const NBestEntry& a, const NBestEntry& b) {
    if (a.score != b.score) {
      return a.score > b.score;
    }
    return a.words < b.words;
  });
  if (result.nbest.size() > static_cast<std::size_t>(options_.nbest)) {
    result.nbest.resize(static_cast<std::size_t>(options_.nbest));
  }
  if (trie_.node(LexiconTrie::kRoot).children.empty()) {
    result.status = DecodeStatus::kEmptyLexicon;
  }
  return result;
}

DecodeResult decodeCtc(
    const EmissionMatrix& emissions,
    const TokenInventory& inventory,
    const LexiconTrie& trie,
    const NGramModel* lm,
    const DecodeOptions& options) {
  options.validate();
  if (options.mode != DecodeMode::kLexiconCtc && options.mode != DecodeMode::kZeroLmCtc) {
    throw InvalidArgument(std::string("decodeCtc does not handle mode ") + toString(options.mode));
  }
  if (static_cast<std::size_t>(emissions.vocab()) != inventory.size()) {
    throw InvalidArgument(
        "emission width " + std::to_string(emissions.vocab()) + " does not match inventory size " +
        std::to_string(inventory.size()));
  }
  if (!emissions.normalized()) {
    throw InvalidArgument("CTC decoding needs normalized emissions");
  }
  if (options.mode == DecodeMode::kLexiconCtc && lm == nullptr) {
    throw InvalidArgument("lexicon_ctc needs a language model");
  }
  checkGranularity(lm, TokenUnit::kWord, toString(options.mode));

  CtcBeamSearch search(inventory, trie, lm, options);
  for (int t = 0; t < emissions.frames(); ++t) {
    search.step(emissions.row(t));
  }
  return search.finish();
}

// ---------------------------------------------------------------------------
// Lexicon-free Seq2Seq

namespace {

struct S2sHypothesis {
  std::vector<TokenId> tokens;
  double am_score = 0;
  double lm_raw = 0;
  LmState lm_state;
  double score = 0;
  bool finished = false;
};

bool s2sBetter(const S2sHypothesis& a, const S2sHypothesis& b) {
  if (a.score != b.score) {
    return a.score > b.score;
  }
  return a.tokens < b.tokens;
}

} // namespace

DecodeResult decodeS2s(
    const SeqScorer& scorer,
    const TokenInventory& inventory,
    const NGramModel* lm,
    const DecodeOptions& options) {
  options.validate();
  if (options.mode != DecodeMode::kLexfreeS2s && options.mode != DecodeMode::kZeroLmS2s) {
    throw InvalidArgument(std::string("decodeS2s does not handle mode ") + toString(options.mode));
  }
  if (static_cast<std::size_t>(scorer.vocab()) != inventory.size()) {
    throw InvalidArgument("scorer vocabulary does not match inventory size");
  }
  if (options.mode == DecodeMode::kLexfreeS2s && lm == nullptr) {
    throw InvalidArgument("lexfree_s2s needs a language model");
  }
  checkGranularity(lm, TokenUnit::kWordPiece, toString(options.mode));

  const double scale = options.effectiveLmWeight() * std::numbers::ln10;
  const int max_len = options.max_output_len > 0 ? options.max_output_len : kDefaultMaxOutputLen;
  const TokenId eos = inventory.eos();
  std::vector<WordId> piece_id(inventory.size(), -1);
  if (lm != nullptr) {
    for (std::size_t i = 0; i < inventory.size(); ++i) {
      piece_id[i] = lm->vocab().index(inventory.token(static_cast<TokenId>(i)));
    }
  }

  std::vector<S2sHypothesis> live(1);
  live[0].lm_state = lm ? lm->beginState() : LmState{};
  std::vector<S2sHypothesis> finished;
  std::vector<S2sHypothesis> candidates;
  std::vector<TokenId> top;

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    candidates.clear();
    for (const auto& hyp : live) {
      auto dist = scorer.next(hyp.tokens);
      if (dist.size() != inventory.size()) {
        throw InvalidArgument(
            "scorer returned " + std::to_string(dist.size()) + " scores, expected " + std::to_string(inventory.size()));
      }
      for (double x : dist) {
        if (std::isnan(x)) {
          throw InvalidArgument("scorer returned NaN");
        }
      }
      double lse = logSumExp(std::span<const double>(dist));
      if (std::abs(lse) > kNormalizationTolerance) {
        throw InvalidArgument("scorer returned a non-normalized distribution (log-sum-exp " + formatDouble(lse) + ")");
      }
      topK(std::span<const double>(dist), options.token_beam, kNoToken, top);
      for (TokenId t : top) {
        S2sHypothesis c;
        c.tokens = hyp.tokens;
        c.tokens.push_back(t);
        c.am_score = hyp.am_score + dist[static_cast<std::size_t>(t)];
        if (t == eos) {
          c.lm_raw = hyp.lm_raw;
          if (lm != nullptr && options.lm_end_transition) {
            c.lm_raw += lm->score(hyp.lm_state, lm->vocab().eos()).log10_prob;
          }
          c.lm_state = hyp.lm_state;
          c.finished = true;
          c.score = c.am_score + scale * c.lm_raw + options.eos_penalty;
        } else {
          if (lm != nullptr) {
            auto ts = lm->score(hyp.lm_state, piece_id[static_cast<std::size_t>(t)]);
            c.lm_raw = hyp.lm_raw + ts.log10_prob;
            c.lm_state = ts.next;
          }
          c.score = c.am_score + scale * c.lm_raw;
        }
        candidates.push_back(std::move(c));
      }
    }
    if (candidates.empty()) {
      live.clear();
      break;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      best = std::max(best, c.score);
    }
    const double floor = best - options.beam_threshold;
    std::erase_if(candidates, [floor](const S2sHypothesis& c) { return c.score < floor; });
    auto keep = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(options.beam));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep), candidates.end(), s2sBetter);
    candidates.resize(keep);

    live.clear();
    for (auto& c : candidates) {
      (c.finished ? finished : live).push_back(std::move(c));
    }

    // Scores never rise again when alpha >= 0 (only gamma can add), so live
    // hypotheses below the nbest-th finished one cannot reach the output.
    if (scale >= 0 && !live.empty() && finished.size() >= static_cast<std::size_t>(options.nbest)) {
      std::vector<double> fs;
      fs.reserve(finished.size());
      for (const auto& f : finished) {
        fs.push_back(f.score);
      }
      auto nth = fs.begin() + (options.nbest - 1);
      std::nth_element(fs.begin(), nth, fs.end(), std::greater<>());
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& h : live) {
        best_live = std::max(best_live, h.score);
      }
      if (best_live + std::max(0.0, options.eos_penalty) < *nth) {
        live.clear();
      }
    }
  }

  DecodeResult result;
  std::vector<S2sHypothesis>* pool = &finished;
  if (finished.empty()) {
    result.status = DecodeStatus::kUnfinished;
    pool = &live;
  }
  std::sort(pool->begin(), pool->end(), s2sBetter);
  std::map<std::vector<std::string>, bool> seen;
  for (const auto& h : *pool) {
    auto words = piecesToWords(h.tokens, inventory, options.word_boundary);
    if (!seen.emplace(words, true).second) {
      continue;
    }
    NBestEntry e;
    e.words = std::move(words);
    e.am_score = h.am_score;
    e.lm_score_raw = h.lm_raw;
    e.char_len = charLength(e.words);
    e.score = h.score;
    result.nbest.push_back(std::move(e));
    if (result.nbest.size() == static_cast<std::size_t>(options.nbest)) {
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// N-best TSV

void dumpNBest(std::span<const NBestEntry> entries, std::ostream& out, bool with_score) {
  out << "utt_id\tam_score\tlm_score_raw\tchar_len\ttranscript";
  if (with_score) {
    out << "\tscore";
  }
  out << '\n';
  for (const auto& e : entries) {
    out << e.utt_id << '\t' << formatDouble(e.am_score) << '\t' << formatDouble(e.lm_score_raw) << '\t' << e.char_len
        << '\t' << e.transcript();
    if (with_score) {
      out << '\t' << formatDouble(e.score);
    }
    out << '\n';
  }
}

std::vector<NBestEntry> loadNBest(std::istream& in) {
  std::vector<NBestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    if (line_no == 1 && line.rfind("utt_id\t", 0) == 0) {
      continue;
    }
    auto fields = splitChar(line, '\t');
    auto where = "n-best line " + std::to_string(line_no) + ": ";
    if (fields.size() != 5 && fields.size() != 6) {
      throw FormatError(where + "expected 5 or 6 tab-separated fields");
    }
    try {
      NBestEntry e;
      e.utt_id = fields[0];
      if (e.utt_id.empty()) {
        throw FormatError("empty utterance id");
      }
      e.am_score = parseDouble(fields[1], "am_score");
      e.lm_score_raw = parseDouble(fields[2], "lm_score_raw");
      auto len = parseInt(fields[3], "char_len");
      e.words = splitWhitespace(fields[4]);
      e.char_len = static_cast<int>(len);
      if (len != charLength(e.words)) {
        throw FormatError("char_len " + std::to_string(len) + " does not match transcript");
      }
      if (fields.size() == 6) {
        e.score = parseDouble(fields[5], "score");
      }
      out.push_back(std::move(e));
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
  return out;
}

} // namespace plkit
