#include "plkit/rescore.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <unordered_map>

namespace plkit {

void RescoreWeights::validate() const {
  if (!std::isfinite(alpha1) || !std::isfinite(alpha2) || !std::isfinite(beta)) {
    throw InvalidArgument("rescoring weights must be finite");
  }
}

void ExternalScores::set(const std::string& utt_id, int rank, double log_prob) {
  if (!scores_.emplace(std::make_pair(utt_id, rank), log_prob).second) {
    throw InvalidArgument("duplicate score for (" + utt_id + ", " + std::to_string(rank) + ")");
  }
}

double ExternalScores::at(const std::string& utt_id, int rank) const {
  auto it = scores_.find({utt_id, rank});
  if (it == scores_.end()) {
    throw Error("missing external score for (" + utt_id + ", " + std::to_string(rank) + ")");
  }
  return it->second;
}

ExternalScores ExternalScores::load(std::istream& in) {
  ExternalScores out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    if (line_no == 1 && line.rfind("utt_id\t", 0) == 0) {
      continue;
    }
    auto fields = splitChar(trim(line), '\t');
    auto where = "score line " + std::to_string(line_no) + ": ";
    if (fields.size() != 3) {
      throw FormatError(where + "expected utt_id, rank, log_prob");
    }
    try {
      auto rank = parseInt(fields[1], "rank");
      if (rank < 0) {
        throw FormatError("negative rank");
      }
      out.set(fields[0], static_cast<int>(rank), parseDouble(fields[2], "log_prob"));
    } catch (const Error& e) {
      throw FormatError(where + e.what());
    }
  }
  return out;
}

ExternalScores ExternalScores::loadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open score file '" + path + "'");
  }
  return load(in);
}

namespace {

double sourceScore(const LmScoreSource& src, const NBestEntry& e, int rank, bool markers) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, const NGramModel*>) {
          return std::numbers::ln10 * s->scoreSentence(e.words, markers).total_log10;
        } else if constexpr (std::is_same_v<T, const ExternalScores*>) {
          return s->at(e.utt_id, rank);
        } else {
          return s;
        }
      },
      src);
}

} // namespace

std::vector<ScoredNBest> attachScores(
    std::span<const NBestEntry> entries,
    const LmScoreSource& lm1,
    const LmScoreSource& lm2,
    bool sentence_markers) {
  std::unordered_map<std::string, int> next_rank;
  std::vector<ScoredNBest> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    int rank = next_rank[e.utt_id]++;
    ScoredNBest s{e, sourceScore(lm1, e, rank, sentence_markers), sourceScore(lm2, e, rank, sentence_markers)};
    out.push_back(std::move(s));
  }
  return out;
}

double rescoreScore(const ScoredNBest& s, const RescoreWeights& w) {
  return s.entry.am_score + w.alpha1 * s.lm1_log + w.alpha2 * s.lm2_log + w.beta * s.entry.char_len;
}

std::vector<NBestEntry> rescore(std::span<const ScoredNBest> entries, const RescoreWeights& w) {
  w.validate();
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto [it, inserted] = groups.try_emplace(entries[i].entry.utt_id);
    if (inserted) {
      order.push_back(entries[i].entry.utt_id);
    }
    it->second.push_back(i);
  }
  std::vector<NBestEntry> out;
  out.reserve(entries.size());
  std::vector<double> score(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    score[i] = rescoreScore(entries[i], w);
  }
  for (const auto& utt : order) {
    auto idx = groups[utt];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (score[a] != score[b]) {
        return score[a] > score[b];
      }
      return entries[a].entry.words < entries[b].entry.words;
    });
    for (auto i : idx) {
      NBestEntry e = entries[i].entry;
      e.score = score[i];
      out.push_back(std::move(e));
    }
  }
  return out;
}

} // namespace plkit
