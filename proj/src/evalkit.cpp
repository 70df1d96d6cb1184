#include "plkit/evalkit.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <unordered_map>

namespace plkit {

WerBreakdown& WerBreakdown::operator+=(const WerBreakdown& o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_length += o.ref_length;
  infinite = infinite || o.infinite;
  if (ref_length > 0) {
    wer = static_cast<double>(errors()) / ref_length;
  } else {
    wer = errors() > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  if (infinite && ref_length == 0) {
    wer = std::numeric_limits<double>::infinity();
  }
  return *this;
}

WerBreakdown wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<int> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> int& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) {
    at(i, 0) = static_cast<int>(i);
  }
  for (std::size_t j = 0; j <= m; ++j) {
    at(0, j) = static_cast<int>(j);
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1), at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  WerBreakdown r;
  r.ref_length = static_cast<int>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) {
        ++r.substitutions;
      }
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++r.deletions;
      --i;
    } else {
      ++r.insertions;
      --j;
    }
  }
  if (n > 0) {
    r.wer = static_cast<double>(r.errors()) / static_cast<double>(n);
  } else if (m > 0) {
    r.infinite = true;
    r.wer = std::numeric_limits<double>::infinity();
  }
  return r;
}

std::vector<std::string> shuffleTranscript(std::vector<std::string> words, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = words.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(words[i - 1], words[pick(rng)]);
  }
  return words;
}

std::vector<std::string> SegmentShuffle::shuffledWords() const {
  std::vector<std::string> out;
  for (auto s : order) {
    for (const auto& w : segments[s]) {
      out.push_back(w.word);
    }
  }
  return out;
}

namespace {

int64_t micros(double seconds) { return std::llround(seconds * 1e6); }

} // namespace

SegmentShuffle segmentShuffle(const std::vector<AlignmentSegment>& utt, const SegmentShuffleOptions& opt) {
  if (!(opt.min_gap >= 0) || opt.max_words_per_segment < 1) {
    throw InvalidArgument("segment shuffle needs min_gap >= 0 and max_words_per_segment >= 1");
  }
  for (std::size_t i = 0; i < utt.size(); ++i) {
    if (!(utt[i].start >= 0) || !(utt[i].duration > 0)) {
      throw InvalidArgument("alignment word '" + utt[i].word + "' needs start >= 0 and duration > 0");
    }
    if (i > 0 && micros(utt[i].start) < micros(utt[i - 1].end())) {
      throw InvalidArgument("alignment segments overlap or are unsorted at word " + std::to_string(i));
    }
  }
  SegmentShuffle r;
  if (utt.empty()) {
    return r;
  }
  const int64_t min_gap = micros(opt.min_gap);
  r.segments.emplace_back();
  for (std::size_t i = 0; i < utt.size(); ++i) {
    if (i > 0) {
      int64_t prev_end = micros(utt[i - 1].end());
      int64_t gap = micros(utt[i].start) - prev_end;
      if (gap > min_gap) {
        r.split_times.push_back(static_cast<double>(prev_end + gap / 2) / 1e6);
        r.segments.emplace_back();
      }
    }
    r.segments.back().push_back(utt[i]);
  }
  bool too_long = std::any_of(r.segments.begin(), r.segments.end(), [&](const auto& s) {
    return s.size() > static_cast<std::size_t>(opt.max_words_per_segment);
  });
  if (r.segments.size() == 1 || too_long) {
    return r;
  }
  r.kept = true;
  r.order.resize(r.segments.size());
  for (std::size_t i = 0; i < r.order.size(); ++i) {
    r.order[i] = i;
  }
  std::mt19937_64 rng(opt.seed);
  for (std::size_t i = r.order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(r.order[i - 1], r.order[pick(rng)]);
  }
  return r;
}

std::map<std::size_t, std::size_t> segmentLengthHistogram(const std::vector<SegmentShuffle>& results) {
  std::map<std::size_t, std::size_t> h;
  for (const auto& r : results) {
    if (!r.kept) {
      continue;
    }
    for (const auto& s : r.segments) {
      ++h[s.size()];
    }
  }
  return h;
}

ProbeResult perplexityProbe(const NGramModel& lm, const std::vector<std::vector<std::string>>& corpus, uint64_t seed,
                            int trials) {
  if (corpus.empty()) {
    throw InvalidArgument("perplexity probe needs a nonempty corpus");
  }
  if (trials < 1) {
    throw InvalidArgument("trials must be >= 1");
  }
  ProbeResult r;
  auto orig = scoreCorpus(lm, corpus);
  r.ppl_original = orig.perplexity;
  r.original_log10 = std::move(orig.sentence_log10);
  double sum = 0;
  for (int t = 0; t < trials; ++t) {
    uint64_t trial_seed = mixSeed(seed, static_cast<uint64_t>(t));
    std::vector<std::vector<std::string>> shuffled;
    shuffled.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      shuffled.push_back(shuffleTranscript(corpus[i], mixSeed(trial_seed, i)));
    }
    auto sc = scoreCorpus(lm, shuffled);
    double p = sc.perplexity;
    r.ppl_shuffled_trials.push_back(p);
    r.shuffled_log10.push_back(std::move(sc.sentence_log10));
    sum += p;
  }
  r.ppl_shuffled = sum / trials;
  return r;
}

void writeProbeReport(const ProbeResult& r, std::ostream& out) {
  out << "ppl_original\t" << formatDouble(r.ppl_original) << '\n';
  out << "ppl_shuffled\t" << formatDouble(r.ppl_shuffled) << '\n';
  for (std::size_t t = 0; t < r.ppl_shuffled_trials.size(); ++t) {
    out << "ppl_shuffled_trial_" << t << '\t' << formatDouble(r.ppl_shuffled_trials[t]) << '\n';
  }
  out << "sentence\toriginal_log10";
  for (std::size_t t = 0; t < r.shuffled_log10.size(); ++t) {
    out << "\tshuffled_log10_" << t;
  }
  out << '\n';
  for (std::size_t i = 0; i < r.original_log10.size(); ++i) {
    out << i << '\t' << formatDouble(r.original_log10[i]);
    for (const auto& trial : r.shuffled_log10) {
      out << '\t' << formatDouble(trial[i]);
    }
    out << '\n';
  }
}

std::vector<std::pair<std::string, std::vector<AlignmentSegment>>> readAlignments(std::istream& in) {
  std::vector<std::pair<std::string, std::vector<AlignmentSegment>>> out;
  std::unordered_map<std::string, std::size_t> pos;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    auto f = splitChar(trim(line), '\t');
    auto where = "alignment line " + std::to_string(line_no) + ": ";
    if (f.size() != 4) {
      throw FormatError(where + "expected utt_id, word, start_s, duration_s");
    }
    if (line_no == 1 && f[0] == "utt_id") {
      continue;
    }
    AlignmentSegment s;
    try {
      s = {f[1], parseDouble(f[2], "start"), parseDouble(f[3], "duration")};
    } catch (const Error& e) {
      throw FormatError(where + e.what());
    }
    auto [it, inserted] = pos.try_emplace(f[0], out.size());
    if (inserted) {
      out.emplace_back(f[0], std::vector<AlignmentSegment>{});
    }
    out[it->second].second.push_back(std::move(s));
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<AlignmentSegment>>> readAlignmentsFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open alignment file '" + path + "'");
  }
  return readAlignments(in);
}

} // namespace plkit
