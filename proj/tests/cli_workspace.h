#pragma once

// Toy inputs plus a script touching every CLI subcommand.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "plkit/emissions.h"

namespace cliws {

namespace fs = std::filesystem;

inline void put(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI inside `dir`; stdout and stderr go to the named files.
inline int run(const fs::path& dir, const std::string& args, const std::string& out = "stdout.txt",
               const std::string& err = "stderr.txt") {
  std::string cmd = "cd " + quote(dir.string()) + " && " + quote(PLKIT_CLI) + " " + args + " > " + out + " 2> " + err;
  int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

inline void prepare(const fs::path& dir) {
  fs::create_directories(dir);
  put(dir / "tokens.txt", "<blank>\n</s>\n|\na\nb\nc\nt\n");
  put(dir / "lexicon.tsv", "cat\tc a t |\nbat\tb a t |\ntab\tt a b |\na\ta |\nabc\ta b c |\nact\ta c t |\n");
  put(dir / "train.txt",
      "cat bat\ntab a cat\na cat\nbat tab abc\nact a cat bat\ncat act\nabc abc tab\na bat\ncat tab a\nbat a cat act\n");
  put(dir / "text.tsv", "u1\tcat bat\nu2\ttab a\nu3\tact abc cat\nu4\ta\nu5\tbat tab cat a\n");
  put(dir / "hyp.tsv", "u1\tcat bat\nu2\ttab\nu3\tact abc bat\nu4\ta a\nu5\tbat tab cat a\n");
  put(dir / "corpus.tsv",
      "b1\tThe Tale of Two Cities\nb2\tMoby Dick\nb3\tA Study in Scarlet Red\nb4\tEmma\nb5\tGreat Expectations\n");
  put(dir / "held.tsv", "h1\ta tale of two cities\nb4\tSomething\nh3\tGREAT  expectations!\nh4\ta study in scarlet\n");
  put(dir / "verdicts.tsv", "b1\th1\tremove\n");
  put(dir / "align.tsv",
      "u1\tcat\t0.00\t0.30\nu1\tbat\t0.50\t0.20\nu1\ttab\t0.71\t0.20\nu2\ta\t0.0\t0.1\nu2\tact\t0.4\t0.3\n"
      "u2\tabc\t0.75\t0.2\n");
  put(dir / "intervals.txt", "0 10\n12 30\n31 40\n45 130\n131 133\n");
  put(dir / "other_manifest.tsv", "x1\tem/u1.emat\nx2\tem/u2.emat\n");
  put(dir / "pieces.txt", "<blank>\n</s>\n_a\n_b\nc\n");
  put(dir / "pieces_train.txt", "_a c\n_b\n_a _b c\n_b c _a\n");
  put(dir / "config.txt", "# decoding preset\nbeam = 8\nlm_weight=0.4\nnbest=3\n");
  const double ninf = -std::numeric_limits<double>::infinity();
  plkit::ReplayScorer r(5);
  auto norm = [](std::vector<double> x) {
    double lse = plkit::logSumExp(std::span<const double>(x));
    for (auto& v : x) v -= lse;
    return x;
  };
  r.set({}, norm({ninf, -3.0, -0.5, -1.2, -2.5}));
  r.set({2}, norm({ninf, -1.0, -2.0, -1.5, -0.8}));
  r.set({3}, norm({ninf, -0.4, -1.5, -2.0, -2.0}));
  r.set({2, 4}, norm({ninf, -0.2, -2.5, -2.5, -3.0}));
  std::ofstream s(dir / "utt.replay");
  r.save(s);
}

struct Step {
  std::string name;
  std::string args;
  int expected_exit = 0;
};

inline std::vector<Step> script() {
  const std::string dec = "--tokens tokens.txt --lexicon lexicon.tsv --lm lm.arpa";
  return {
      {"lm-train", "--seed 7 lm-train --text train.txt --order 3 --out lm.arpa"},
      {"lm-train-piece", "lm-train --text pieces_train.txt --order 2 --unit piece --out piece.arpa"},
      {"lm-perplexity", "lm-perplexity --lm lm.arpa --text train.txt"},
      {"synth", "--seed 7 synth --tokens tokens.txt --lexicon lexicon.tsv --text text.tsv --out-dir em --noise 0.4"},
      {"synth-clean", "--seed 7 synth --tokens tokens.txt --lexicon lexicon.tsv --text text.tsv --out-dir em0"},
      {"decode", "decode " + dec + " --lm-weight 0.5 --word-insertion 0.2 --beam 16 --nbest 4 --manifest em/manifest.tsv --with-score --out nbest.tsv"},
      {"decode-zerolm", "decode " + dec + " --mode zerolm_ctc --nbest 4 --manifest em/manifest.tsv --out nbest_zerolm.tsv"},
      {"decode-greedy", "decode --tokens tokens.txt --mode greedy --word-boundary '|' --input em/u3.emat --utt-id u3 --out greedy.tsv"},
      {"decode-s2s", "decode --tokens pieces.txt --lm piece.arpa --mode lexfree_s2s --lm-weight 0.3 --eos-penalty -0.5 --nbest 3 --max-output-len 4 --input utt.replay --utt-id s1 --out s2s.tsv"},
      {"decode-config", "--config config.txt decode " + dec + " --manifest em/manifest.tsv --out nbest_config.tsv"},
      {"pseudo-label", "--workers 2 pseudo-label " + dec + " --lm-weight 0.5 --manifest em0/manifest.tsv --out labels.tsv --nbest-out pl_nbest.tsv"},
      {"rescore", "rescore --nbest nbest.tsv --lm1 lm.arpa --lm2-const 0 --alpha1 0.3 --beta 0.1 --out rescored.tsv"},
      {"tune-rescore", "--seed 7 tune --space rescore-s2s-random --trials 25 --nbest nbest.tsv --refs text.tsv --lm1 lm.arpa --lm2-const 0 --out tune_rescore.tsv"},
      {"tune-decode", "--seed 7 --workers 2 tune --space dump-ctc-ngram --trials 4 --manifest em/manifest.tsv " + dec + " --out tune_decode.tsv"},
      {"tune-dry", "tune --space rescore-ctc-grid --dry-run"},
      {"corpus-filter", "corpus-filter --corpus corpus.tsv --held-out held.tsv --verdicts verdicts.tsv --kept kept.txt --removed removed.tsv --pending pending.tsv"},
      {"wer", "wer text.tsv hyp.tsv --details"},
      {"shuffle", "--seed 7 shuffle --text train.txt --out shuffled.txt"},
      {"shuffle-segments", "--seed 7 shuffle --alignments align.tsv --histogram hist.tsv --out shuffled_segments.tsv"},
      {"probe", "--seed 7 probe --lm lm.arpa --text train.txt --trials 5 --out probe.tsv"},
      {"chunk", "chunk --intervals intervals.txt --out chunks.tsv"},
      {"merge", "merge --input clean=em0/manifest.tsv --input other=other_manifest.tsv --out merged.tsv"},
  };
}

// Runs the whole script in a fresh `dir`; returns every resulting file's
// bytes keyed by relative path, plus a failure message if a step misbehaved.
inline std::map<std::string, std::string> runScript(const fs::path& dir, std::string* failure) {
  fs::remove_all(dir);
  prepare(dir);
  for (const auto& s : script()) {
    int code = run(dir, s.args, "out_" + s.name + ".txt", "err_" + s.name + ".txt");
    if (code != s.expected_exit && failure->empty()) {
      *failure = s.name + " exited " + std::to_string(code) + ": " + slurp(dir / ("err_" + s.name + ".txt"));
    }
  }
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
  }
  return files;
}

} // namespace cliws
