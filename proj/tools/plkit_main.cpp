// plkit command-line front end.
//
// Exit codes: 0 success, 1 failure (or some items failed), 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "plkit/corpus.h"
#include "plkit/decoder.h"
#include "plkit/emissions.h"
#include "plkit/evalkit.h"
#include "plkit/lexicon.h"
#include "plkit/lm.h"
#include "plkit/pipeline.h"
#include "plkit/rescore.h"
#include "plkit/tune.h"

namespace {

using namespace plkit;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string root;
  uint64_t seed = 0;
  int workers = 1;
};
Globals g;

std::string at(const std::string& p) { return resolvePath(g.root, p); }

// Writes to `path` (under --root) or stdout when empty.
void withOutput(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(at(path), std::ios::binary);
  if (!out) {
    throw Error("cannot write '" + at(path) + "'");
  }
  fn(out);
  if (!out) {
    throw Error("write failed for '" + at(path) + "'");
  }
}

std::ifstream openInput(const std::string& path) {
  std::ifstream in(at(path), std::ios::binary);
  if (!in) {
    throw Error("cannot open '" + at(path) + "'");
  }
  return in;
}

// ---- decoding flags shared by decode, pseudo-label and tune ----

struct DecodeFlags {
  std::string tokens;
  std::string lexicon;
  std::string lm;
  std::string mode = "lexicon_ctc";
  std::string merge = "logadd";
  std::string blank = std::string(kDefaultBlank);
  std::string eos = std::string(kDefaultEos);
  DecodeOptions opt;
  bool no_lm_end = false;
  bool no_cache = false;

  void add(CLI::App* app) {
    app->add_option("--tokens", tokens, "token inventory, one token per line")->required();
    app->add_option("--lexicon", lexicon, "lexicon file: word<TAB>tokens");
    app->add_option("--lm", lm, "ARPA language model");
    app->add_option("--mode", mode, "lexicon_ctc | lexfree_s2s | zerolm_ctc | zerolm_s2s | greedy")->capture_default_str();
    app->add_option("--beam", opt.beam)->capture_default_str();
    app->add_option("--token-beam", opt.token_beam)->capture_default_str();
    app->add_option("--beam-threshold", opt.beam_threshold)->capture_default_str();
    app->add_option("--lm-weight", opt.lm_weight)->capture_default_str();
    app->add_option("--word-insertion", opt.word_insertion)->capture_default_str();
    app->add_option("--eos-penalty", opt.eos_penalty)->capture_default_str();
    app->add_option("--blank-threshold", opt.blank_threshold)->capture_default_str();
    app->add_option("--nbest", opt.nbest)->capture_default_str();
    app->add_option("--max-output-len", opt.max_output_len)->capture_default_str();
    app->add_option("--merge", merge, "logadd | max")->capture_default_str();
    app->add_option("--word-boundary", opt.word_boundary)->capture_default_str();
    app->add_option("--blank", blank, "blank token")->capture_default_str();
    app->add_option("--eos", eos, "end-of-sentence token")->capture_default_str();
    app->add_flag("--no-lm-end", no_lm_end, "skip the LM </s> transition at the end");
    app->add_flag("--no-lm-cache", no_cache, "disable LM score memoization");
  }
};

struct DecodeResources {
  std::unique_ptr<TokenInventory> inventory;
  std::unique_ptr<LexiconTrie> trie;
  std::unique_ptr<NGramModel> lm;
  DecodeSetup setup;
};

DecodeResources loadResources(const DecodeFlags& f) {
  DecodeResources r;
  r.setup.options = f.opt;
  r.setup.options.mode = parseDecodeMode(f.mode);
  r.setup.options.merge_rule = parseMergeRule(f.merge);
  r.setup.options.lm_end_transition = !f.no_lm_end;
  r.setup.options.cache_lm_scores = !f.no_cache;
  r.setup.options.validate();
  r.inventory = std::make_unique<TokenInventory>(TokenInventory::loadFile(at(f.tokens), f.blank, f.eos));
  auto mode = r.setup.options.mode;
  bool ctc = mode == DecodeMode::kLexiconCtc || mode == DecodeMode::kZeroLmCtc;
  bool s2s = mode == DecodeMode::kLexfreeS2s || mode == DecodeMode::kZeroLmS2s;
  if (ctc) {
    if (f.lexicon.empty()) {
      throw InvalidArgument(std::string("--lexicon is required for mode ") + toString(mode));
    }
    r.trie = std::make_unique<LexiconTrie>(loadLexiconFile(at(f.lexicon), *r.inventory));
  }
  if (!f.lm.empty()) {
    r.lm = std::make_unique<NGramModel>(
        loadArpaFile(at(f.lm), s2s ? TokenUnit::kWordPiece : TokenUnit::kWord));
  }
  r.setup.inventory = r.inventory.get();
  r.setup.trie = r.trie.get();
  r.setup.lm = r.lm.get();
  return r;
}

std::vector<std::string> words(const std::string& s) { return splitWhitespace(s); }

// Stable across platforms, unlike std::hash.
uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h = (h ^ c) * 1099511628211ull;
  }
  return h;
}

// Reads "utt_id<TAB>text" lines.
std::map<std::string, std::string> readIdText(const std::string& path) {
  auto in = openInput(path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (trim(line).empty()) {
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path + " line " + std::to_string(n) + ": expected utt_id<TAB>text");
    }
    if (!out.emplace(line.substr(0, tab), line.substr(tab + 1)).second) {
      throw FormatError(path + " line " + std::to_string(n) + ": duplicate utt_id");
    }
  }
  return out;
}

// ---- subcommands ----

int cmdLmTrain(const std::string& text, const std::string& out, int order, const std::vector<int>& prune,
               double discount, const std::string& unit) {
  TrainOptions opt;
  opt.max_order = order;
  opt.prune_thresholds = prune;
  opt.discount = discount;
  opt.unit = parseTokenUnit(unit);
  auto corpus = readTextCorpusFile(at(text));
  auto model = train(corpus, opt);
  withOutput(out, [&](std::ostream& os) { saveArpa(model, os); });
  return kExitOk;
}

int cmdLmPerplexity(const std::string& lm_path, const std::string& text, const std::string& unit, bool no_markers) {
  auto model = loadArpaFile(at(lm_path), parseTokenUnit(unit));
  auto corpus = readTextCorpusFile(at(text));
  long oov = 0, events = 0;
  for (const auto& s : corpus) {
    auto sc = model.scoreSentence(s, !no_markers);
    oov += sc.oov_count;
    events += sc.events;
  }
  double ppl = perplexity(model, corpus, !no_markers);
  std::cout << "perplexity\t" << formatDouble(ppl) << "\nevents\t" << events << "\noov\t" << oov << '\n';
  return kExitOk;
}

void reportErrors(const std::vector<std::pair<std::string, std::string>>& errors, const std::string& path) {
  for (const auto& [id, msg] : errors) {
    std::cerr << "error\t" << id << '\t' << msg << '\n';
  }
  if (!path.empty()) {
    withOutput(path, [&](std::ostream& os) {
      for (const auto& [id, msg] : errors) {
        os << id << '\t' << msg << '\n';
      }
    });
  }
}

std::vector<ManifestRow> manifestOrSingle(const std::string& manifest, const std::string& input,
                                          const std::string& utt_id) {
  if (!manifest.empty() && !input.empty()) {
    throw InvalidArgument("give either --manifest or --input, not both");
  }
  if (!manifest.empty()) {
    auto in = openInput(manifest);
    return readManifest(in);
  }
  if (input.empty()) {
    throw InvalidArgument("one of --manifest or --input is required");
  }
  return {ManifestRow{utt_id, input, std::nullopt, std::nullopt}};
}

int cmdDecode(const DecodeFlags& f, const std::string& manifest, const std::string& input, const std::string& utt_id,
              const std::string& out, bool with_score, const std::string& errors_path) {
  auto res = loadResources(f);
  auto rows = manifestOrSingle(manifest, input, utt_id);
  auto r = pseudoLabel(rows, res.setup, g.root, g.workers);
  withOutput(out, [&](std::ostream& os) { dumpNBest(r.nbest, os, with_score); });
  reportErrors(r.errors, errors_path);
  return r.errors.empty() ? kExitOk : kExitFailure;
}

int cmdPseudoLabel(const DecodeFlags& f, const std::string& manifest, const std::string& out,
                   const std::string& nbest_out, const std::string& errors_path) {
  auto res = loadResources(f);
  auto in = openInput(manifest);
  auto rows = readManifest(in);
  auto r = pseudoLabel(rows, res.setup, g.root, g.workers);
  withOutput(out, [&](std::ostream& os) { writeLabels(r, os); });
  if (!nbest_out.empty()) {
    withOutput(nbest_out, [&](std::ostream& os) { dumpNBest(r.nbest, os); });
  }
  reportErrors(r.errors, errors_path);
  std::cerr << "labeled " << r.labels.size() << " of " << rows.size() << " utterances\n";
  return r.errors.empty() ? kExitOk : kExitFailure;
}

struct LmSourceFlags {
  std::string arpa;
  std::string scores;
  double constant = 0;
  std::string unit = "word";

  void add(CLI::App* app, const std::string& name) {
    app->add_option("--" + name, arpa, "ARPA model scored in-process");
    app->add_option("--" + name + "-scores", scores, "per-hypothesis scores: utt_id, rank, log_prob");
    app->add_option("--" + name + "-const", constant, "constant score for every hypothesis");
    app->add_option("--" + name + "-unit", unit, "word | piece")->capture_default_str();
  }
};

struct LmSourceHolder {
  std::unique_ptr<NGramModel> model;
  std::unique_ptr<ExternalScores> scores;
  LmScoreSource source = 0.0;
};

LmSourceHolder loadSource(const LmSourceFlags& f) {
  LmSourceHolder h;
  if (!f.arpa.empty() && !f.scores.empty()) {
    throw InvalidArgument("an LM source takes either a model or a score file");
  }
  if (!f.arpa.empty()) {
    h.model = std::make_unique<NGramModel>(loadArpaFile(at(f.arpa), parseTokenUnit(f.unit)));
    h.source = h.model.get();
  } else if (!f.scores.empty()) {
    h.scores = std::make_unique<ExternalScores>(ExternalScores::loadFile(at(f.scores)));
    h.source = h.scores.get();
  } else {
    h.source = f.constant;
  }
  return h;
}

std::vector<NBestEntry> readNBestFile(const std::string& path) {
  auto in = openInput(path);
  return loadNBest(in);
}

int cmdRescore(const std::string& nbest, const LmSourceFlags& l1, const LmSourceFlags& l2, RescoreWeights w,
               const std::string& out, bool top1) {
  auto entries = readNBestFile(nbest);
  auto s1 = loadSource(l1);
  auto s2 = loadSource(l2);
  auto scored = attachScores(entries, s1.source, s2.source);
  auto ranked = rescore(scored, w);
  if (top1) {
    std::set<std::string> seen;
    std::vector<NBestEntry> best;
    for (auto& e : ranked) {
      if (seen.insert(e.utt_id).second) {
        best.push_back(e);
      }
    }
    ranked = std::move(best);
  }
  withOutput(out, [&](std::ostream& os) { dumpNBest(ranked, os, true); });
  return kExitOk;
}

double corpusWer(const std::map<std::string, std::vector<std::string>>& refs,
                 const std::map<std::string, std::vector<std::string>>& hyps) {
  WerBreakdown total;
  for (const auto& [id, ref] : refs) {
    auto it = hyps.find(id);
    static const std::vector<std::string> kEmpty;
    total += wer(ref, it == hyps.end() ? kEmpty : it->second);
  }
  return total.wer;
}

int cmdTune(const std::string& space_name, const std::string& space_file, bool dry_run, bool list, int trials_flag,
            bool without_replacement, double grid_step, const std::string& out, bool timing,
            const DecodeFlags& df, const std::string& manifest, const std::string& nbest, const std::string& refs,
            const LmSourceFlags& l1, const LmSourceFlags& l2) {
  if (list) {
    for (const auto& [name, s] : builtinSpaces()) {
      std::cout << name << '\t' << (s.strategy == Strategy::kGrid ? "grid" : "random") << '\t'
                << s.plannedEvaluations() << '\t' << s.description << '\n';
    }
    return kExitOk;
  }
  NamedSpace space;
  if (!space_file.empty()) {
    auto in = openInput(space_file);
    space.name = space_file;
    space.space = parseSearchSpace(in);
    space.strategy = grid_step > 0 ? Strategy::kGrid : Strategy::kRandom;
    space.trials = 128;
    space.grid_step = grid_step;
  } else if (!space_name.empty()) {
    space = builtinSpace(space_name);
    if (grid_step > 0 && space.strategy == Strategy::kGrid) {
      space.grid_step = grid_step;
    }
  } else {
    throw InvalidArgument("one of --space or --space-file is required");
  }
  if (trials_flag > 0 && space.strategy == Strategy::kRandom) {
    space.trials = trials_flag;
  }
  std::vector<ParamSet> points;
  if (space.strategy == Strategy::kGrid) {
    auto axes = space.axes();
    points = gridPoints(axes);
  } else {
    RandomSearchOptions ro;
    ro.trials = space.trials;
    ro.seed = g.seed;
    ro.without_replacement = without_replacement;
    points = randomPoints(space.space, ro);
  }
  if (dry_run) {
    std::cout << points.size() << " planned evaluations\n";
    return kExitOk;
  }

  Objective objective;
  std::map<std::string, std::vector<std::string>> ref_words;
  DecodeResources res;
  std::vector<ManifestRow> rows;
  std::vector<ScoredNBest> scored;
  LmSourceHolder s1, s2;
  bool rescoring = space.space.params().size() > 0 && [&] {
    for (const auto& [n, s] : space.space.params()) {
      if (n == "alpha1" || n == "alpha2" || n == "beta") {
        return true;
      }
    }
    return false;
  }();
  if (rescoring) {
    if (nbest.empty() || refs.empty()) {
      throw InvalidArgument("rescoring search needs --nbest and --refs");
    }
    for (const auto& [id, text] : readIdText(refs)) {
      ref_words[id] = words(text);
    }
    auto entries = readNBestFile(nbest);
    s1 = loadSource(l1);
    s2 = loadSource(l2);
    scored = attachScores(entries, s1.source, s2.source);
    objective = [&](const ParamSet& p) {
      RescoreWeights w;
      for (const auto& [k, v] : p) {
        if (k == "alpha1") {
          w.alpha1 = v;
        } else if (k == "alpha2") {
          w.alpha2 = v;
        } else if (k == "beta") {
          w.beta = v;
        } else {
          throw InvalidArgument("unknown rescoring parameter '" + k + "'");
        }
      }
      std::map<std::string, std::vector<std::string>> hyps;
      for (const auto& e : rescore(scored, w)) {
        hyps.try_emplace(e.utt_id, e.words);
      }
      return corpusWer(ref_words, hyps);
    };
  } else {
    if (manifest.empty() || df.tokens.empty()) {
      throw InvalidArgument("decoding search needs --manifest (with references) and --tokens");
    }
    res = loadResources(df);
    auto in = openInput(manifest);
    rows = readManifest(in);
    for (const auto& r : rows) {
      if (!r.reference) {
        throw InvalidArgument("manifest row '" + r.utt_id + "' has no reference transcript");
      }
      ref_words[r.utt_id] = words(*r.reference);
    }
    objective = [&](const ParamSet& p) {
      DecodeSetup setup = res.setup;
      auto& o = setup.options;
      for (const auto& [k, v] : p) {
        if (k == "beam") {
          o.beam = static_cast<int>(std::lround(v));
        } else if (k == "token_beam") {
          o.token_beam = static_cast<int>(std::lround(v));
        } else if (k == "lm_weight") {
          o.lm_weight = v;
        } else if (k == "beam_threshold") {
          o.beam_threshold = v;
        } else if (k == "word_insertion") {
          o.word_insertion = v;
        } else if (k == "eos_penalty") {
          o.eos_penalty = v;
        } else {
          throw InvalidArgument("unknown decoding parameter '" + k + "'");
        }
      }
      o.nbest = std::min(o.nbest, o.beam);
      auto r = pseudoLabel(rows, setup, g.root, 1);
      if (!r.errors.empty()) {
        throw Error("decoding failed for " + r.errors.front().first + ": " + r.errors.front().second);
      }
      std::map<std::string, std::vector<std::string>> hyps;
      for (const auto& [id, text] : r.labels) {
        hyps[id] = words(text);
      }
      return corpusWer(ref_words, hyps);
    };
  }
  auto results = evaluatePoints(points, objective, g.workers);
  withOutput(out, [&](std::ostream& os) { writeTrials(results, os, timing); });
  bool any_failed = false;
  for (const auto& r : results) {
    any_failed = any_failed || !r.ok();
  }
  if (!results.empty() && results.front().ok()) {
    std::cerr << "best trial " << results.front().index << " wer " << formatDouble(results.front().wer * 100) << "%\n";
  }
  return any_failed ? kExitFailure : kExitOk;
}

int cmdCorpusFilter(const std::string& corpus_path, const std::string& held_path, const std::string& verdict_path,
                    FuzzyMatchParams p, const std::string& kept_out, const std::string& removed_out,
                    const std::string& pending_out) {
  auto corpus = readTitlesFile(at(corpus_path));
  auto held = readTitlesFile(at(held_path));
  std::vector<PairVerdict> verdicts;
  if (!verdict_path.empty()) {
    verdicts = readVerdictsFile(at(verdict_path));
  }
  auto r = filterCorpus(corpus, held, p, verdicts, g.workers);
  withOutput(kept_out, [&](std::ostream& os) {
    for (const auto& id : r.kept) {
      os << id << '\n';
    }
  });
  if (!removed_out.empty()) {
    withOutput(removed_out, [&](std::ostream& os) {
      for (const auto& id : r.removed_by_id) {
        os << id << "\tid\n";
      }
      for (const auto& id : r.removed_by_title) {
        os << id << "\ttitle\n";
      }
      for (const auto& id : r.removed_by_verdict) {
        os << id << "\tverdict\n";
      }
    });
  }
  if (!pending_out.empty()) {
    withOutput(pending_out, [&](std::ostream& os) { writePending(r.pending, corpus, held, os); });
  }
  std::cerr << "kept " << r.kept.size() << ", removed " << r.removed().size() << ", pending " << r.pending.size()
            << '\n';
  return kExitOk;
}

// Lines are "utt_id<TAB>text" or bare text; both files must use the same form.
std::vector<std::pair<std::string, std::vector<std::string>>> readTranscripts(const std::string& path) {
  auto in = openInput(path);
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      out.emplace_back("", words(line));
    } else {
      out.emplace_back(line.substr(0, tab), words(line.substr(tab + 1)));
    }
  }
  while (!out.empty() && out.back().first.empty() && out.back().second.empty()) {
    out.pop_back();
  }
  return out;
}

int cmdWer(const std::string& ref_path, const std::string& hyp_path, bool details) {
  auto refs = readTranscripts(ref_path);
  auto hyps = readTranscripts(hyp_path);
  bool keyed = !refs.empty() && !refs.front().first.empty();
  WerBreakdown total;
  if (keyed) {
    std::map<std::string, std::vector<std::string>> h;
    for (auto& [id, w] : hyps) {
      if (!h.emplace(id, w).second) {
        throw FormatError("duplicate hypothesis id '" + id + "'");
      }
    }
    for (const auto& [id, w] : refs) {
      auto it = h.find(id);
      total += wer(w, it == h.end() ? std::vector<std::string>{} : it->second);
    }
  } else {
    if (refs.size() != hyps.size()) {
      throw FormatError("reference and hypothesis line counts differ (" + std::to_string(refs.size()) + " vs " +
                        std::to_string(hyps.size()) + ")");
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
      total += wer(refs[i].second, hyps[i].second);
    }
  }
  char buf[64];
  if (total.infinite || std::isinf(total.wer)) {
    std::snprintf(buf, sizeof buf, "inf");
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", total.wer * 100.0);
  }
  std::cout << buf << '\n';
  if (details) {
    std::cout << "substitutions\t" << total.substitutions << "\ndeletions\t" << total.deletions << "\ninsertions\t"
              << total.insertions << "\nreference_words\t" << total.ref_length << '\n';
  }
  return kExitOk;
}

int cmdShuffle(const std::string& text, const std::string& alignments, SegmentShuffleOptions so,
               const std::string& out, const std::string& histogram_out) {
  if (text.empty() == alignments.empty()) {
    throw InvalidArgument("give exactly one of --text or --alignments");
  }
  if (!text.empty()) {
    auto lines = readTranscripts(text);
    withOutput(out, [&](std::ostream& os) {
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto shuffled = shuffleTranscript(lines[i].second, mixSeed(g.seed, i));
        if (!lines[i].first.empty()) {
          os << lines[i].first << '\t';
        }
        os << join(shuffled, " ") << '\n';
      }
    });
    return kExitOk;
  }
  auto utts = readAlignmentsFile(at(alignments));
  std::vector<SegmentShuffle> results;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    so.seed = mixSeed(g.seed, i);
    results.push_back(segmentShuffle(utts[i].second, so));
  }
  withOutput(out, [&](std::ostream& os) {
    for (std::size_t i = 0; i < utts.size(); ++i) {
      if (results[i].kept) {
        os << utts[i].first << '\t' << join(results[i].shuffledWords(), " ") << '\n';
      }
    }
  });
  if (!histogram_out.empty()) {
    withOutput(histogram_out, [&](std::ostream& os) {
      os << "segment_words\tcount\n";
      for (const auto& [len, count] : segmentLengthHistogram(results)) {
        os << len << '\t' << count << '\n';
      }
    });
  }
  std::size_t kept = 0;
  for (const auto& r : results) {
    kept += r.kept ? 1 : 0;
  }
  std::cerr << "kept " << kept << " of " << results.size() << " utterances\n";
  return kExitOk;
}

int cmdProbe(const std::string& lm_path, const std::string& text, int trials, const std::string& unit,
             const std::string& out) {
  auto model = loadArpaFile(at(lm_path), parseTokenUnit(unit));
  auto corpus = readTextCorpusFile(at(text));
  auto r = perplexityProbe(model, corpus, g.seed, trials);
  withOutput(out, [&](std::ostream& os) { writeProbeReport(r, os); });
  return kExitOk;
}

int cmdChunk(const std::string& intervals, double max_chunk, const std::string& out) {
  auto in = openInput(intervals);
  auto chunks = chunkIntervals(readIntervals(in), max_chunk);
  withOutput(out, [&](std::ostream& os) {
    for (const auto& c : chunks) {
      os << formatDouble(c.start) << '\t' << formatDouble(c.end) << '\n';
    }
  });
  return kExitOk;
}

int cmdMerge(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<TaggedManifest> ms;
  for (const auto& spec : inputs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidArgument("--input expects tag=path, got '" + spec + "'");
    }
    auto in = openInput(spec.substr(eq + 1));
    ms.push_back({spec.substr(0, eq), readManifest(in)});
  }
  withOutput(out, [&](std::ostream& os) { mergeManifests(ms, os); });
  return kExitOk;
}

int cmdSynth(const std::string& tokens, const std::string& lexicon, const std::string& text,
             const std::string& out_dir, double noise, int fpt, bool as_text, const std::string& blank,
             const std::string& eos) {
  auto inv = TokenInventory::loadFile(at(tokens), blank, eos);
  std::optional<Lexicon> lex;
  if (!lexicon.empty()) {
    lex = loadLexiconFile(at(lexicon), inv);
  }
  auto utts = readIdText(text);
  std::filesystem::create_directories(at(out_dir));
  std::vector<ManifestRow> rows;
  for (const auto& [id, transcript] : utts) {
    std::vector<TokenId> seq;
    for (const auto& w : words(transcript)) {
      if (lex) {
        auto i = lex->find(w);
        if (!i) {
          throw InvalidArgument("word '" + w + "' of " + id + " is not in the lexicon");
        }
        const auto& sp = lex->entry(*i).spellings.front();
        seq.insert(seq.end(), sp.begin(), sp.end());
      } else {
        auto t = inv.find(w);
        if (!t) {
          throw InvalidArgument("token '" + w + "' of " + id + " is not in the inventory");
        }
        seq.push_back(*t);
      }
    }
    auto em = synthEmissions(seq, inv, noise, fpt, mixSeed(g.seed, fnv1a(id)));
    std::string rel = (std::filesystem::path(out_dir) / (id + (as_text ? ".emat.txt" : ".emat"))).string();
    std::ofstream os(at(rel), std::ios::binary);
    if (!os) {
      throw Error("cannot write '" + at(rel) + "'");
    }
    if (as_text) {
      writeEmissionsText(em, os);
    } else {
      writeEmissions(em, os);
    }
    rows.push_back({id, rel, transcript, std::nullopt});
  }
  withOutput((std::filesystem::path(out_dir) / "manifest.tsv").string(),
             [&](std::ostream& os) { writeManifest(rows, os); });
  return kExitOk;
}

// Appends "--key=value" for every entry of the --config file whose option
// was not given on the command line.
std::vector<std::string> expandConfig(std::vector<std::string> args) {
  std::string config;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a.rfind("--", 0) != 0) {
      continue;
    }
    auto eq = a.find('=');
    auto name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(name);
    if (name == "config") {
      if (eq != std::string::npos) {
        config = a.substr(eq + 1);
      } else if (i + 1 < args.size()) {
        config = args[i + 1];
      }
    }
  }
  if (config.empty()) {
    return args;
  }
  std::ifstream in(config);
  if (!in) {
    // --root is not known yet; try it relative to the current directory only.
    throw CLI::ValidationError("--config", "cannot open '" + config + "'");
  }
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto body = trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) {
      continue;
    }
    auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw CLI::ValidationError("--config", "line " + std::to_string(n) + ": expected key=value");
    }
    std::string key(trim(body.substr(0, eq)));
    std::string value(trim(body.substr(eq + 1)));
    for (auto& c : key) {
      if (c == '_') {
        c = '-';
      }
    }
    if (!given.count(key)) {
      args.push_back("--" + key + "=" + value);
    }
  }
  return args;
}

int run(int argc, char** argv) {
  CLI::App app{"plkit: decoding, rescoring and pseudo-labeling toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config;
  app.add_option("--config", config, "key=value preset file; command-line flags win");
  app.add_option("--root", g.root, "directory that relative paths are resolved against");
  app.add_option("--seed", g.seed, "seed for every random choice")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  std::function<int()> action;

  // lm-train
  auto* lt = app.add_subcommand("lm-train", "train a backoff n-gram model");
  std::string lt_text, lt_out, lt_unit = "word";
  int lt_order = 3;
  std::vector<int> lt_prune;
  double lt_discount = 0.75;
  lt->add_option("--text", lt_text, "training text; 'utt_id<TAB>text' lines allowed")->required();
  lt->add_option("--order", lt_order)->capture_default_str();
  lt->add_option("--prune", lt_prune, "per-order count thresholds, e.g. 0 0 1")->delimiter(',');
  lt->add_option("--discount", lt_discount)->capture_default_str();
  lt->add_option("--unit", lt_unit, "word | piece")->capture_default_str();
  lt->add_option("--out", lt_out, "ARPA output (stdout if absent)");
  lt->callback([&] { action = [&] { return cmdLmTrain(lt_text, lt_out, lt_order, lt_prune, lt_discount, lt_unit); }; });

  // lm-perplexity
  auto* lp = app.add_subcommand("lm-perplexity", "perplexity without unknown-word events");
  std::string lp_lm, lp_text, lp_unit = "word";
  bool lp_no_markers = false;
  lp->add_option("--lm", lp_lm)->required();
  lp->add_option("--text", lp_text)->required();
  lp->add_option("--unit", lp_unit)->capture_default_str();
  lp->add_flag("--no-markers", lp_no_markers, "do not add <s> and </s>");
  lp->callback([&] { action = [&] { return cmdLmPerplexity(lp_lm, lp_text, lp_unit, lp_no_markers); }; });

  // decode
  auto* dc = app.add_subcommand("decode", "beam-search decoding to an N-best TSV");
  DecodeFlags dc_flags;
  std::string dc_manifest, dc_input, dc_utt = "utt", dc_out, dc_errors;
  bool dc_score = false;
  dc_flags.add(dc);
  dc->add_option("--manifest", dc_manifest, "utt_id<TAB>path[<TAB>ref[<TAB>duration]]");
  dc->add_option("--input", dc_input, "single emission matrix or replay-scorer file");
  dc->add_option("--utt-id", dc_utt, "id used with --input")->capture_default_str();
  dc->add_option("--out", dc_out);
  dc->add_option("--errors", dc_errors, "failed utterances report");
  dc->add_flag("--with-score", dc_score, "append the decoder score column");
  dc->callback([&] {
    action = [&] { return cmdDecode(dc_flags, dc_manifest, dc_input, dc_utt, dc_out, dc_score, dc_errors); };
  });

  // rescore
  auto* rs = app.add_subcommand("rescore", "reorder N-best lists with external LM scores");
  std::string rs_nbest, rs_out;
  LmSourceFlags rs_l1, rs_l2;
  RescoreWeights rs_w;
  bool rs_top1 = false;
  rs->add_option("--nbest", rs_nbest)->required();
  rs_l1.add(rs, "lm1");
  rs_l2.add(rs, "lm2");
  rs->add_option("--alpha1", rs_w.alpha1)->capture_default_str();
  rs->add_option("--alpha2", rs_w.alpha2)->capture_default_str();
  rs->add_option("--beta", rs_w.beta)->capture_default_str();
  rs->add_flag("--top1", rs_top1, "only the best entry per utterance");
  rs->add_option("--out", rs_out);
  rs->callback([&] { action = [&] { return cmdRescore(rs_nbest, rs_l1, rs_l2, rs_w, rs_out, rs_top1); }; });

  // tune
  auto* tu = app.add_subcommand("tune", "random or grid search over decoding/rescoring weights");
  std::string tu_space, tu_space_file, tu_out, tu_manifest, tu_nbest, tu_refs;
  bool tu_dry = false, tu_list = false, tu_wor = false, tu_timing = false;
  int tu_trials = 0;
  double tu_step = 0;
  DecodeFlags tu_flags;
  LmSourceFlags tu_l1, tu_l2;
  tu->add_option("--space", tu_space, "built-in search space name (see --list)");
  tu->add_option("--space-file", tu_space_file, "search space file");
  tu->add_flag("--list", tu_list, "list built-in spaces");
  tu->add_flag("--dry-run", tu_dry, "print the number of planned evaluations and stop");
  tu->add_option("--trials", tu_trials, "override the trial count of a random search");
  tu->add_option("--grid-step", tu_step, "grid step; turns a space file into a grid search");
  tu->add_flag("--without-replacement", tu_wor, "draw distinct points from a discrete space");
  tu->add_flag("--timing", tu_timing, "add wall-clock seconds per trial to the output");
  tu->add_option("--out", tu_out, "trial table");
  tu->add_option("--manifest", tu_manifest, "decoding search: manifest with references");
  tu->add_option("--nbest", tu_nbest, "rescoring search: N-best TSV");
  tu->add_option("--refs", tu_refs, "rescoring search: utt_id<TAB>reference");
  tu->add_option("--tokens", tu_flags.tokens);
  tu->add_option("--lexicon", tu_flags.lexicon);
  tu->add_option("--lm", tu_flags.lm);
  tu->add_option("--mode", tu_flags.mode)->capture_default_str();
  tu->add_option("--merge", tu_flags.merge)->capture_default_str();
  tu->add_option("--nbest-size", tu_flags.opt.nbest)->capture_default_str();
  tu->add_option("--blank-threshold", tu_flags.opt.blank_threshold)->capture_default_str();
  tu->add_option("--max-output-len", tu_flags.opt.max_output_len)->capture_default_str();
  tu_l1.add(tu, "lm1");
  tu_l2.add(tu, "lm2");
  tu->callback([&] {
    action = [&] {
      return cmdTune(tu_space, tu_space_file, tu_dry, tu_list, tu_trials, tu_wor, tu_step, tu_out, tu_timing,
                     tu_flags, tu_manifest, tu_nbest, tu_refs, tu_l1, tu_l2);
    };
  });

  // corpus-filter
  auto* cf = app.add_subcommand("corpus-filter", "drop LM-corpus books overlapping held-out books");
  std::string cf_corpus, cf_held, cf_verdicts, cf_kept, cf_removed, cf_pending;
  FuzzyMatchParams cf_p;
  cf->add_option("--corpus", cf_corpus, "id<TAB>title of corpus books")->required();
  cf->add_option("--held-out", cf_held, "id<TAB>title of held-out books")->required();
  cf->add_option("--verdicts", cf_verdicts, "left_id<TAB>right_id<TAB>remove|keep");
  cf->add_option("--len-ratio", cf_p.len_ratio)->capture_default_str();
  cf->add_option("--dist-ratio", cf_p.dist_ratio)->capture_default_str();
  cf->add_option("--kept", cf_kept, "kept ids (stdout if absent)");
  cf->add_option("--removed", cf_removed, "removed ids with stage");
  cf->add_option("--pending", cf_pending, "unresolved fuzzy pairs");
  cf->callback([&] {
    action = [&] { return cmdCorpusFilter(cf_corpus, cf_held, cf_verdicts, cf_p, cf_kept, cf_removed, cf_pending); };
  });

  // wer
  auto* we = app.add_subcommand("wer", "corpus word error rate in percent");
  std::string we_ref, we_hyp;
  bool we_details = false;
  we->add_option("ref", we_ref)->required();
  we->add_option("hyp", we_hyp)->required();
  we->add_flag("--details", we_details, "print S/D/I counts");
  we->callback([&] { action = [&] { return cmdWer(we_ref, we_hyp, we_details); }; });

  // shuffle
  auto* sh = app.add_subcommand("shuffle", "word-level or silence-segment shuffling");
  std::string sh_text, sh_align, sh_out, sh_hist;
  SegmentShuffleOptions sh_opt;
  sh->add_option("--text", sh_text, "transcripts to shuffle word by word");
  sh->add_option("--alignments", sh_align, "utt_id<TAB>word<TAB>start_s<TAB>duration_s");
  sh->add_option("--min-gap", sh_opt.min_gap, "seconds")->capture_default_str();
  sh->add_option("--max-words", sh_opt.max_words_per_segment)->capture_default_str();
  sh->add_option("--histogram", sh_hist, "segment length histogram");
  sh->add_option("--out", sh_out);
  sh->callback([&] { action = [&] { return cmdShuffle(sh_text, sh_align, sh_opt, sh_out, sh_hist); }; });

  // probe
  auto* pr = app.add_subcommand("probe", "perplexity of original vs shuffled text");
  std::string pr_lm, pr_text, pr_unit = "word", pr_out;
  int pr_trials = 1;
  pr->add_option("--lm", pr_lm)->required();
  pr->add_option("--text", pr_text)->required();
  pr->add_option("--trials", pr_trials)->capture_default_str()->check(CLI::PositiveNumber);
  pr->add_option("--unit", pr_unit)->capture_default_str();
  pr->add_option("--out", pr_out);
  pr->callback([&] { action = [&] { return cmdProbe(pr_lm, pr_text, pr_trials, pr_unit, pr_out); }; });

  // chunk
  auto* ch = app.add_subcommand("chunk", "pack speech intervals into bounded chunks");
  std::string ch_in, ch_out;
  double ch_max = kDefaultMaxChunk;
  ch->add_option("--intervals", ch_in, "'start end' seconds per line")->required();
  ch->add_option("--max-chunk", ch_max)->capture_default_str();
  ch->add_option("--out", ch_out);
  ch->callback([&] { action = [&] { return cmdChunk(ch_in, ch_max, ch_out); }; });

  // pseudo-label
  auto* pl = app.add_subcommand("pseudo-label", "top-1 transcripts for a manifest");
  DecodeFlags pl_flags;
  std::string pl_manifest, pl_out, pl_nbest, pl_errors;
  pl_flags.add(pl);
  pl->add_option("--manifest", pl_manifest)->required();
  pl->add_option("--out", pl_out, "utt_id<TAB>transcript");
  pl->add_option("--nbest-out", pl_nbest);
  pl->add_option("--errors", pl_errors, "failed utterances report");
  pl->callback([&] { action = [&] { return cmdPseudoLabel(pl_flags, pl_manifest, pl_out, pl_nbest, pl_errors); }; });

  // merge
  auto* mg = app.add_subcommand("merge", "concatenate manifests with a source column");
  std::vector<std::string> mg_in;
  std::string mg_out;
  mg->add_option("--input", mg_in, "tag=path, repeatable")->required();
  mg->add_option("--out", mg_out);
  mg->callback([&] { action = [&] { return cmdMerge(mg_in, mg_out); }; });

  // synth
  auto* sy = app.add_subcommand("synth", "synthetic CTC emissions for transcripts");
  std::string sy_tokens, sy_lex, sy_text, sy_dir, sy_blank = std::string(kDefaultBlank), sy_eos = std::string(kDefaultEos);
  double sy_noise = 0;
  int sy_fpt = 2;
  bool sy_text_fmt = false;
  sy->add_option("--tokens", sy_tokens)->required();
  sy->add_option("--lexicon", sy_lex, "spell words through the lexicon; otherwise words are tokens");
  sy->add_option("--text", sy_text, "utt_id<TAB>transcript")->required();
  sy->add_option("--out-dir", sy_dir)->required();
  sy->add_option("--noise", sy_noise)->capture_default_str();
  sy->add_option("--frames-per-token", sy_fpt)->capture_default_str();
  sy->add_option("--blank", sy_blank)->capture_default_str();
  sy->add_option("--eos", sy_eos)->capture_default_str();
  sy->add_flag("--text-format", sy_text_fmt, "write the text twin of the binary format");
  sy->callback([&] {
    action = [&] {
      return cmdSynth(sy_tokens, sy_lex, sy_text, sy_dir, sy_noise, sy_fpt, sy_text_fmt, sy_blank, sy_eos);
    };
  });

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  try {
    args = expandConfig(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    return action();
  } catch (const InvalidArgument& e) {
    std::cerr << "plkit: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "plkit: " << e.what() << '\n';
    return kExitFailure;
  }
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
