#pragma once

#include <cmath>
#include <map>
#include <span>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "plkit/corpus.h"
#include "plkit/lm.h"

namespace fixture {

struct TitleFixture {
  std::vector<plkit::TitleRecord> corpus;
  std::vector<plkit::TitleRecord> held_out;
  std::vector<plkit::PairVerdict> verdicts;
};

inline std::string randomWord(std::mt19937_64& rng) {
  static const char* syll[] = {"ka", "lo", "mi", "ne", "ru", "ta", "so", "vi", "de", "po", "an", "el"};
  std::uniform_int_distribution<int> n(1, 3), s(0, 11);
  std::string w;
  for (int i = n(rng); i > 0; --i) {
    w += syll[s(rng)];
  }
  return w;
}

inline std::string decorate(std::mt19937_64& rng, const std::vector<std::string>& words) {
  // Casing and punctuation noise that normalization must undo.
  static const char* punct[] = {"", "", ",", "!", "'", "--", "."};
  std::uniform_int_distribution<int> p(0, 6);
  std::bernoulli_distribution upper(0.3);
  std::string out;
  for (const auto& w : words) {
    std::string x = w;
    if (upper(rng)) {
      x[0] = static_cast<char>(x[0] - 'a' + 'A');
    }
    out += (out.empty() ? "" : "  ") + x + punct[p(rng)];
  }
  return out;
}

// `total` titles split 4:1 into corpus and held-out, with planted id,
// exact-title and near-title overlaps.
inline TitleFixture makeTitles(uint64_t seed, int total = 1000) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(1, 9);
  auto title = [&] {
    std::vector<std::string> w;
    for (int i = len(rng); i > 0; --i) {
      w.push_back(randomWord(rng));
    }
    return w;
  };
  TitleFixture f;
  int held = total / 5;
  for (int i = 0; i < held; ++i) {
    f.held_out.push_back(plkit::TitleRecord::make("h" + std::to_string(i), decorate(rng, title())));
  }
  std::uniform_int_distribution<int> pick(0, held - 1);
  std::uniform_real_distribution<double> u(0, 1);
  std::set<std::string> shared;
  for (int i = 0; i < total - held; ++i) {
    double r = u(rng);
    const auto& src = f.held_out[static_cast<std::size_t>(pick(rng))];
    std::string id = "c" + std::to_string(i);
    std::vector<std::string> words;
    if (r < 0.04 && shared.insert(src.id).second) {
      id = src.id;  // shared id
      words = title();
    } else if (r < 0.10) {
      words = src.words;  // same title, different decoration
    } else if (r < 0.22 && !src.words.empty()) {
      words = src.words;  // one or two edits
      std::uniform_int_distribution<std::size_t> pos(0, words.size() - 1);
      int edits = u(rng) < 0.6 ? 1 : 2;
      for (int e = 0; e < edits; ++e) {
        double kind = u(rng);
        if (kind < 0.5) {
          words[pos(rng)] = randomWord(rng);
        } else if (kind < 0.75) {
          words.insert(words.begin() + static_cast<long>(pos(rng)), randomWord(rng));
        } else if (words.size() > 1) {
          words.erase(words.begin() + static_cast<long>(pos(rng)));
        }
      }
    } else if (r < 0.24) {
      words = {};  // punctuation only
      f.corpus.push_back(plkit::TitleRecord::make(id, "-- !!"));
      continue;
    } else {
      words = title();
    }
    f.corpus.push_back(plkit::TitleRecord::make(id, decorate(rng, words)));
  }
  // Verdicts for some of the near matches.
  for (const auto& p : plkit::fuzzyCandidates(f.corpus, f.held_out, {})) {
    double r = u(rng);
    if (r < 0.3) {
      f.verdicts.push_back({p.left_id, p.right_id, plkit::Verdict::kRemove});
    } else if (r < 0.5) {
      f.verdicts.push_back({p.left_id, p.right_id, plkit::Verdict::kKeep});
    }
  }
  return f;
}

// Sentences from a random second-order Markov chain over a small vocabulary,
// so that word order carries information.
inline std::vector<std::vector<std::string>> markovCorpus(uint64_t seed, int sentences, int vocab = 30) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> trans(static_cast<std::size_t>(vocab + 1));
  std::gamma_distribution<double> g(0.1, 1.0);
  for (auto& row : trans) {
    row.resize(static_cast<std::size_t>(vocab + 1));
    for (auto& x : row) {
      x = g(rng);
    }
  }
  std::vector<std::vector<std::string>> out;
  for (int s = 0; s < sentences; ++s) {
    std::vector<std::string> sent;
    int prev = vocab;  // start state
    while (sent.size() < 25) {
      std::discrete_distribution<int> next(trans[static_cast<std::size_t>(prev)].begin(),
                                           trans[static_cast<std::size_t>(prev)].end());
      int w = next(rng);
      if (w == vocab) {
        if (!sent.empty()) {
          break;
        }
        continue;
      }
      sent.push_back("t" + std::to_string(w));
      prev = w;
    }
    out.push_back(std::move(sent));
  }
  return out;
}

} // namespace fixture

namespace fixture {

// Draws sentences from the model's own conditional distributions.
inline std::vector<std::vector<std::string>> sampleFromLm(const plkit::NGramModel& lm, int sentences, uint64_t seed,
                                                         std::size_t max_len = 30) {
  std::mt19937_64 rng(seed);
  const auto& v = lm.vocab();
  std::vector<plkit::WordId> candidates;
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto id = static_cast<plkit::WordId>(i);
    if (id != v.bos() && id != v.unk()) {
      candidates.push_back(id);
    }
  }
  std::vector<std::vector<std::string>> out;
  std::vector<double> w(candidates.size());
  while (static_cast<int>(out.size()) < sentences) {
    std::vector<plkit::WordId> hist{v.bos()};
    std::vector<std::string> sent;
    while (sent.size() < max_len) {
      std::size_t keep = std::min<std::size_t>(hist.size(), static_cast<std::size_t>(lm.maxOrder() - 1));
      std::span<const plkit::WordId> ctx(hist.data() + hist.size() - keep, keep);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        w[i] = std::pow(10.0, lm.scoreContext(ctx, candidates[i]));
      }
      auto next = candidates[std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng)];
      if (next == v.eos()) {
        break;
      }
      hist.push_back(next);
      sent.push_back(v.word(next));
    }
    if (sent.size() >= 2) {
      out.push_back(std::move(sent));
    }
  }
  return out;
}

} // namespace fixture
