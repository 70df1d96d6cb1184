#include "plkit/lm.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

namespace plkit {

namespace {

std::size_t hashIds(std::span<const WordId> ids) {
  uint64_t h = 0xcbf29ce484222325ULL ^ ids.size();
  for (WordId w : ids) {
    h ^= static_cast<uint32_t>(w);
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

} // namespace

Vocabulary::Vocabulary() {
  add(kSentenceBegin);
  add(kSentenceEnd);
  add(kUnknownWord);
}

WordId Vocabulary::add(std::string_view word) {
  auto it = index_.find(std::string(word));
  if (it != index_.end()) {
    return it->second;
  }
  auto id = static_cast<WordId>(words_.size());
  words_.emplace_back(word);
  index_.emplace(words_.back(), id);
  return id;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

WordId Vocabulary::index(std::string_view word) const {
  return find(word).value_or(unk());
}

std::size_t LmStateHash::operator()(const LmState& s) const noexcept {
  return hashIds(s.context());
}

const char* toString(TokenUnit unit) {
  return unit == TokenUnit::kWord ? "word" : "piece";
}

TokenUnit parseTokenUnit(std::string_view s) {
  if (s == "word") {
    return TokenUnit::kWord;
  }
  if (s == "piece" || s == "wordpiece") {
    return TokenUnit::kWordPiece;
  }
  throw InvalidArgument("unknown token unit '" + std::string(s) + "'");
}

std::size_t NGramModel::KeyHash::operator()(const Key& k) const noexcept {
  return hashIds({k.words.data(), k.length});
}

NGramModel::NGramModel(int max_order, TokenUnit unit) : max_order_(max_order), unit_(unit) {
  if (max_order < 1 || max_order > kMaxLmOrder) {
    throw InvalidArgument(
        "n-gram order must be in [1, " + std::to_string(kMaxLmOrder) + "], got " +
        std::to_string(max_order));
  }
  tables_.resize(static_cast<std::size_t>(max_order));
}

NGramModel::Key NGramModel::makeKey(std::span<const WordId> ngram) {
  Key k;
  k.length = static_cast<uint8_t>(ngram.size());
  std::copy(ngram.begin(), ngram.end(), k.words.begin());
  return k;
}

long NGramModel::lookup(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > static_cast<std::size_t>(max_order_)) {
    return -1;
  }
  if (ngram.size() == 1) {
    auto w = static_cast<std::size_t>(ngram[0]);
    return w < unigram_.size() ? unigram_[w] : -1;
  }
  const auto& table = tables_[ngram.size() - 1];
  auto it = table.index.find(makeKey(ngram));
  return it == table.index.end() ? -1 : static_cast<long>(it->second);
}

bool NGramModel::hasUnigram(WordId w) const {
  return w >= 0 && static_cast<std::size_t>(w) < unigram_.size() && unigram_[static_cast<std::size_t>(w)] >= 0;
}

void NGramModel::setEntry(std::span<const WordId> ngram, double log10_prob, double log10_backoff) {
  if (ngram.empty() || ngram.size() > static_cast<std::size_t>(max_order_)) {
    throw InvalidArgument("n-gram length outside model order");
  }
  for (WordId w : ngram) {
    if (w < 0 || static_cast<std::size_t>(w) >= vocab_.size()) {
      throw InvalidArgument("n-gram word id outside vocabulary");
    }
  }
  long existing = lookup(ngram);
  auto& table = tables_[ngram.size() - 1];
  if (existing >= 0) {
    table.prob[static_cast<std::size_t>(existing)] = log10_prob;
    table.backoff[static_cast<std::size_t>(existing)] = log10_backoff;
    return;
  }
  auto idx = static_cast<uint32_t>(table.prob.size());
  table.words.insert(table.words.end(), ngram.begin(), ngram.end());
  table.prob.push_back(log10_prob);
  table.backoff.push_back(log10_backoff);
  if (ngram.size() == 1) {
    auto w = static_cast<std::size_t>(ngram[0]);
    if (unigram_.size() <= w) {
      unigram_.resize(std::max(w + 1, vocab_.size()), -1);
    }
    unigram_[w] = static_cast<int32_t>(idx);
  } else {
    table.index.emplace(makeKey(ngram), idx);
  }
}

void NGramModel::setBackoff(std::span<const WordId> ngram, double log10_backoff) {
  long idx = lookup(ngram);
  if (idx < 0) {
    throw InvalidArgument("backoff for missing n-gram");
  }
  tables_[ngram.size() - 1].backoff[static_cast<std::size_t>(idx)] = log10_backoff;
}

std::optional<NGramModel::EntryView> NGramModel::find(std::span<const WordId> ngram) const {
  long idx = lookup(ngram);
  if (idx < 0) {
    return std::nullopt;
  }
  return entry(static_cast<int>(ngram.size()), static_cast<std::size_t>(idx));
}

std::size_t NGramModel::entryCount(int order) const {
  if (order < 1 || order > max_order_) {
    return 0;
  }
  return tables_[static_cast<std::size_t>(order - 1)].prob.size();
}

std::size_t NGramModel::totalEntries() const {
  std::size_t n = 0;
  for (const auto& t : tables_) {
    n += t.prob.size();
  }
  return n;
}

NGramModel::EntryView NGramModel::entry(int order, std::size_t i) const {
  const auto& t = tables_[static_cast<std::size_t>(order - 1)];
  auto width = static_cast<std::size_t>(order);
  return {std::span<const WordId>(t.words.data() + i * width, width), t.prob[i], t.backoff[i]};
}

LmState NGramModel::shrink(std::span<const WordId> context) const {
  auto keep = std::min<std::size_t>(context.size(), static_cast<std::size_t>(max_order_ - 1));
  auto tail = context.subspan(context.size() - keep);
  while (!tail.empty() && !contains(tail)) {
    tail = tail.subspan(1);
  }
  LmState s;
  s.length = static_cast<uint8_t>(tail.size());
  std::copy(tail.begin(), tail.end(), s.words.begin());
  return s;
}

LmState NGramModel::beginState() const {
  WordId bos = vocab_.bos();
  return shrink({&bos, 1});
}

double NGramModel::scoreContext(std::span<const WordId> context, WordId token) const {
  auto keep = std::min<std::size_t>(context.size(), static_cast<std::size_t>(max_order_ - 1));
  context = context.subspan(context.size() - keep);
  if (!hasUnigram(token)) {
    token = vocab_.unk();
  }
  std::array<WordId, kMaxLmOrder> buf{};
  double backoff = 0;
  for (auto n = static_cast<long>(context.size()); n >= 0; --n) {
    auto hist = context.subspan(context.size() - static_cast<std::size_t>(n));
    std::copy(hist.begin(), hist.end(), buf.begin());
    buf[static_cast<std::size_t>(n)] = token;
    long idx = lookup({buf.data(), static_cast<std::size_t>(n) + 1});
    if (idx >= 0) {
      return tables_[static_cast<std::size_t>(n)].prob[static_cast<std::size_t>(idx)] + backoff;
    }
    if (n > 0) {
      long h = lookup(hist);
      if (h >= 0) {
        backoff += tables_[static_cast<std::size_t>(n - 1)].backoff[static_cast<std::size_t>(h)];
      }
    }
  }
  return unk_floor_;
}

TokenScore NGramModel::score(const LmState& state, WordId token) const {
  TokenScore r;
  r.oov = token == vocab_.unk() || !hasUnigram(token);
  if (!hasUnigram(token)) {
    token = vocab_.unk();
  }
  auto context = state.context();
  std::array<WordId, kMaxLmOrder> buf{};
  std::copy(context.begin(), context.end(), buf.begin());
  buf[context.size()] = token;
  std::span<const WordId> full(buf.data(), context.size() + 1);

  double backoff = 0;
  bool matched = false;
  for (auto n = static_cast<long>(context.size()); n >= 0; --n) {
    auto ngram = full.subspan(context.size() - static_cast<std::size_t>(n));
    long idx = lookup(ngram);
    if (idx >= 0) {
      r.log10_prob = tables_[static_cast<std::size_t>(n)].prob[static_cast<std::size_t>(idx)] + backoff;
      r.matched_order = static_cast<int>(n) + 1;
      matched = true;
      break;
    }
    if (n > 0) {
      long h = lookup(ngram.first(static_cast<std::size_t>(n)));
      if (h >= 0) {
        backoff += tables_[static_cast<std::size_t>(n - 1)].backoff[static_cast<std::size_t>(h)];
      }
    }
  }
  if (!matched) {
    r.log10_prob = unk_floor_;
  }
  r.next = shrink(full);
  return r;
}

SentenceScore NGramModel::scoreSentence(std::span<const std::string> tokens, bool sentence_markers) const {
  SentenceScore out;
  LmState state = sentence_markers ? beginState() : nullState();
  auto step = [&](WordId id) {
    TokenScore ts = score(state, id);
    out.total_log10 += ts.log10_prob;
    ++out.events;
    if (ts.oov) {
      ++out.oov_count;
    } else {
      out.known_log10 += ts.log10_prob;
    }
    state = ts.next;
  };
  for (const auto& tok : tokens) {
    step(vocab_.index(tok));
  }
  if (sentence_markers) {
    step(vocab_.eos());
  }
  return out;
}

void NGramModel::validate() const {
  for (int order = 1; order <= max_order_; ++order) {
    for (std::size_t i = 0; i < entryCount(order); ++i) {
      auto e = entry(order, i);
      if (!(e.log10_prob <= 0.0)) {
        throw FormatError("positive log10 probability for " + std::to_string(order) + "-gram");
      }
      if (order > 1 && !contains(e.words.first(static_cast<std::size_t>(order - 1)))) {
        std::string text;
        for (WordId w : e.words) {
          text += (text.empty() ? "" : " ") + vocab_.word(w);
        }
        throw FormatError("n-gram '" + text + "' has no prefix entry");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// ARPA text I/O

namespace {

bool startsWith(std::string_view s, std::string_view p) {
  return s.substr(0, p.size()) == p;
}

// Parses "\k-grams:"; returns k or 0.
int sectionOrder(std::string_view line) {
  if (!startsWith(line, "\\") || line.size() < 9 || line.substr(line.size() - 7) != "-grams:") {
    return 0;
  }
  auto digits = line.substr(1, line.size() - 8);
  try {
    auto k = parseInt(digits, "section order");
    return k > 0 ? static_cast<int>(k) : -1;
  } catch (const FormatError&) {
    return -1;
  }
}

} // namespace

NGramModel loadArpa(std::istream& in, TokenUnit unit) {
  std::string raw;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> FormatError {
    return FormatError("ARPA line " + std::to_string(line_no) + ": " + msg);
  };

  bool seen_data = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (trim(raw) == "\\data\\") {
      seen_data = true;
      break;
    }
  }
  if (!seen_data) {
    throw FormatError("ARPA: missing \\data\\ header");
  }

  std::vector<std::size_t> counts;
  std::string_view line;
  bool pending_line = false;
  while (std::getline(in, raw)) {
    ++line_no;
    line = trim(raw);
    if (line.empty()) {
      if (counts.empty()) {
        continue;
      }
      break;
    }
    if (!startsWith(line, "ngram ")) {
      pending_line = true;
      break;
    }
    auto rest = trim(line.substr(6));
    auto eq = rest.find('=');
    if (eq == std::string_view::npos) {
      throw fail("malformed ngram count line");
    }
    long long order = 0;
    long long count = 0;
    try {
      order = parseInt(rest.substr(0, eq), "ngram order");
      count = parseInt(rest.substr(eq + 1), "ngram count");
    } catch (const FormatError& e) {
      throw fail(e.what());
    }
    if (order != static_cast<long long>(counts.size()) + 1 || count < 0) {
      throw fail("ngram counts must list orders 1..N in sequence");
    }
    counts.push_back(static_cast<std::size_t>(count));
  }
  if (counts.empty()) {
    throw fail("header declares no n-gram counts");
  }
  if (counts.size() > static_cast<std::size_t>(kMaxLmOrder)) {
    throw fail("order " + std::to_string(counts.size()) + " exceeds supported maximum");
  }
  const int max_order = static_cast<int>(counts.size());
  NGramModel model(max_order, unit);

  int expected_order = 1;
  bool ended = false;
  std::vector<WordId> ids;
  auto read_next = [&]() -> bool {
    if (pending_line) {
      pending_line = false;
      return true;
    }
    if (!std::getline(in, raw)) {
      return false;
    }
    ++line_no;
    line = trim(raw);
    return true;
  };

  int current = 0;
  std::size_t seen = 0;
  auto close_section = [&]() {
    if (current > 0 && seen != counts[static_cast<std::size_t>(current - 1)]) {
      throw fail(
          "section " + std::to_string(current) + "-grams has " + std::to_string(seen) +
          " entries, header declares " + std::to_string(counts[static_cast<std::size_t>(current - 1)]));
    }
  };
  while (read_next()) {
    if (line.empty()) {
      continue;
    }
    if (line == "\\end\\") {
      close_section();
      ended = true;
      break;
    }
    if (line.front() == '\\') {
      int k = sectionOrder(line);
      if (k <= 0) {
        throw fail("unrecognized section '" + std::string(line) + "'");
      }
      if (k > max_order) {
        throw fail("section for order " + std::to_string(k) + " beyond declared maximum " + std::to_string(max_order));
      }
      if (k != expected_order) {
        throw fail("sections out of order");
      }
      close_section();
      current = k;
      seen = 0;
      ++expected_order;
      continue;
    }
    if (current == 0) {
      throw fail("entry outside of an n-gram section");
    }
    auto fields = splitWhitespace(line);
    auto k = static_cast<std::size_t>(current);
    if (fields.size() != k + 1 && fields.size() != k + 2) {
      throw fail(
          "expected " + std::to_string(current) + "-gram entry, got " + std::to_string(fields.size()) + " fields");
    }
    double prob = 0;
    double backoff = 0;
    try {
      prob = parseDouble(fields[0], "log10 probability");
      if (fields.size() == k + 2) {
        backoff = parseDouble(fields[k + 1], "log10 backoff");
      }
    } catch (const FormatError& e) {
      throw fail(e.what());
    }
    if (fields.size() == k + 2 && current == max_order) {
      throw fail("backoff weight on a highest-order entry");
    }
    ids.clear();
    for (std::size_t i = 1; i <= k; ++i) {
      if (current == 1) {
        ids.push_back(model.addWord(fields[i]));
      } else {
        auto id = model.vocab().find(fields[i]);
        if (!id || !model.contains(std::span<const WordId>(&*id, 1))) {
          throw fail("word '" + fields[i] + "' has no unigram entry");
        }
        ids.push_back(*id);
      }
    }
    if (model.contains(ids)) {
      throw fail("duplicate n-gram entry");
    }
    model.setEntry(ids, prob, backoff);
    ++seen;
    if (seen > counts[k - 1]) {
      throw fail("more " + std::to_string(current) + "-grams than declared");
    }
  }
  if (!ended) {
    throw fail("missing \\end\\ marker");
  }
  if (expected_order != max_order + 1) {
    throw fail("missing n-gram sections");
  }
  model.validate();
  return model;
}

NGramModel loadArpaFile(const std::string& path, TokenUnit unit) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open language model '" + path + "'");
  }
  return loadArpa(in, unit);
}

void saveArpa(const NGramModel& model, std::ostream& out) {
  out << "\\data\\\n";
  for (int k = 1; k <= model.maxOrder(); ++k) {
    out << "ngram " << k << '=' << model.entryCount(k) << '\n';
  }
  for (int k = 1; k <= model.maxOrder(); ++k) {
    out << "\n\\" << k << "-grams:\n";
    for (std::size_t i = 0; i < model.entryCount(k); ++i) {
      auto e = model.entry(k, i);
      out << formatDouble(e.log10_prob) << '\t';
      for (std::size_t j = 0; j < e.words.size(); ++j) {
        if (j > 0) {
          out << ' ';
        }
        out << model.vocab().word(e.words[j]);
      }
      if (k < model.maxOrder()) {
        out << '\t' << formatDouble(e.log10_backoff);
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

CorpusScore scoreCorpus(const NGramModel& model, const std::vector<std::vector<std::string>>& corpus, bool sentence_markers) {
  if (corpus.empty()) {
    throw InvalidArgument("perplexity of an empty corpus");
  }
  CorpusScore out;
  std::vector<double> known;
  for (const auto& sentence : corpus) {
    LmState state = sentence_markers ? model.beginState() : model.nullState();
    double total = 0;
    auto step = [&](WordId id) {
      TokenScore ts = model.score(state, id);
      total += ts.log10_prob;
      if (ts.oov) {
        ++out.oov_events;
      } else {
        known.push_back(ts.log10_prob);
      }
      state = ts.next;
    };
    for (const auto& tok : sentence) {
      step(model.vocab().index(tok));
    }
    if (sentence_markers) {
      step(model.vocab().eos());
    }
    out.sentence_log10.push_back(total);
  }
  if (known.empty()) {
    throw InvalidArgument("corpus has no scorable (in-vocabulary) events");
  }
  std::sort(known.begin(), known.end());
  double sum = 0;
  for (double x : known) {
    sum += x;
  }
  out.known_events = static_cast<long long>(known.size());
  out.perplexity = std::pow(10.0, -sum / static_cast<double>(known.size()));
  return out;
}

double perplexity(const NGramModel& model, const std::vector<std::vector<std::string>>& corpus, bool sentence_markers) {
  return scoreCorpus(model, corpus, sentence_markers).perplexity;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct IdSeqLess {
  bool operator()(const std::vector<WordId>& a, const std::vector<WordId>& b) const { return a < b; }
};

} // namespace

NGramModel train(const std::vector<std::vector<std::string>>& corpus, const TrainOptions& options) {
  const int order = options.max_order;
  if (order < 1 || order > kMaxLmOrder) {
    throw InvalidArgument("max_order must be in [1, " + std::to_string(kMaxLmOrder) + "]");
  }
  std::vector<int> thresholds = options.prune_thresholds;
  if (thresholds.empty()) {
    thresholds.assign(static_cast<std::size_t>(order), 0);
  }
  if (thresholds.size() != static_cast<std::size_t>(order)) {
    throw InvalidArgument("need one pruning threshold per order");
  }
  if (thresholds[0] != 0) {
    throw InvalidArgument("unigram pruning is not supported");
  }
  for (int t : thresholds) {
    if (t < 0) {
      throw InvalidArgument("pruning thresholds must be >= 0");
    }
  }
  if (!(options.discount > 0.0 && options.discount <= 1.0)) {
    throw InvalidArgument("discount must be in (0, 1]");
  }
  if (corpus.empty()) {
    throw InvalidArgument("cannot train on an empty corpus");
  }

  NGramModel model(order, options.unit);
  std::set<std::string> words;
  for (const auto& s : corpus) {
    words.insert(s.begin(), s.end());
  }
  for (const auto& w : words) {
    model.addWord(w);
  }
  const auto& vocab = model.vocab();

  // counts[k-1]: every k-gram ending on a predicted position (<s> is never predicted).
  std::vector<std::map<std::vector<WordId>, long long, IdSeqLess>> counts(static_cast<std::size_t>(order));
  std::vector<WordId> padded;
  for (const auto& s : corpus) {
    padded.clear();
    padded.push_back(vocab.bos());
    for (const auto& w : s) {
      padded.push_back(vocab.index(w));
    }
    padded.push_back(vocab.eos());
    for (std::size_t end = 1; end < padded.size(); ++end) {
      for (std::size_t k = 1; k <= static_cast<std::size_t>(order) && k <= end + 1; ++k) {
        std::vector<WordId> gram(padded.begin() + static_cast<long>(end + 1 - k), padded.begin() + static_cast<long>(end + 1));
        ++counts[k - 1][gram];
      }
    }
  }

  const double d = options.discount;
  auto discounted = [d](long long c) { return static_cast<double>(c) - std::min(static_cast<double>(c), d); };

  // Unigrams: discounted counts interpolated with a uniform distribution over
  // every predictable word (</s>, <unk>, corpus words).
  {
    long long total = 0;
    double mass = 0;
    for (const auto& [gram, c] : counts[0]) {
      total += c;
      mass += std::min(static_cast<double>(c), d);
    }
    const double gamma = mass / static_cast<double>(total);
    const double uniform = 1.0 / static_cast<double>(vocab.size() - 1);
    for (WordId w = 0; w < static_cast<WordId>(vocab.size()); ++w) {
      double lp = -99.0;
      if (w != vocab.bos()) {
        auto it = counts[0].find({w});
        long long c = it == counts[0].end() ? 0 : it->second;
        double p = discounted(c) / static_cast<double>(total) + gamma * uniform;
        lp = std::min(0.0, std::log10(p));
      }
      model.setEntry(std::span<const WordId>(&w, 1), lp, 0.0);
    }
  }

  for (int k = 2; k <= order; ++k) {
    const auto& grams = counts[static_cast<std::size_t>(k - 1)];
    const int threshold = thresholds[static_cast<std::size_t>(k - 1)];
    std::map<std::vector<WordId>, long long, IdSeqLess> context_total;
    std::map<std::vector<WordId>, double, IdSeqLess> kept_mass;
    std::vector<std::pair<std::vector<WordId>, long long>> kept;
    for (const auto& [gram, c] : grams) {
      std::vector<WordId> ctx(gram.begin(), gram.end() - 1);
      context_total[ctx] += c;
      if (c > threshold && model.contains(ctx)) {
        kept.emplace_back(gram, c);
        kept_mass[ctx] += discounted(c) / 1.0;
      }
    }
    // Backoff of every (k-1)-gram entry: the mass left after discounting.
    std::map<std::vector<WordId>, double, IdSeqLess> gamma;
    for (std::size_t i = 0; i < model.entryCount(k - 1); ++i) {
      auto e = model.entry(k - 1, i);
      std::vector<WordId> ctx(e.words.begin(), e.words.end());
      double g = 1.0;
      auto tot = context_total.find(ctx);
      if (tot != context_total.end() && tot->second > 0) {
        auto km = kept_mass.find(ctx);
        double m = km == kept_mass.end() ? 0.0 : km->second;
        g = 1.0 - m / static_cast<double>(tot->second);
      }
      gamma[ctx] = g;
    }
    for (const auto& [ctx, g] : gamma) {
      model.setBackoff(ctx, std::log10(g));
    }
    for (const auto& [gram, c] : kept) {
      std::vector<WordId> ctx(gram.begin(), gram.end() - 1);
      double lower = std::pow(10.0, model.scoreContext(std::span<const WordId>(ctx).subspan(1), gram.back()));
      double p = discounted(c) / static_cast<double>(context_total[ctx]) + gamma[ctx] * lower;
      model.setEntry(gram, std::min(0.0, std::log10(p)), 0.0);
    }
  }
  return model;
}

} // namespace plkit
