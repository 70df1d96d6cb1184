#include "plkit/corpus.h"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <unordered_map>

#include "plkit/parallel.h"

namespace plkit {

TitleRecord TitleRecord::make(std::string id, std::string raw) {
  TitleRecord r;
  r.id = std::move(id);
  r.words = normalizeTitle(raw);
  r.raw = std::move(raw);
  return r;
}

void FuzzyMatchParams::validate() const {
  if (!(len_ratio >= 0) || !(dist_ratio >= 0)) {
    throw InvalidArgument("fuzzy match ratios must be >= 0");
  }
}

std::vector<std::string> normalizeTitle(std::string_view raw) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw Error("ICU NFC normalizer unavailable");
  }
  icu::UnicodeString text = icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  icu::UnicodeString norm = nfc->normalize(text, status);
  if (U_FAILURE(status)) {
    throw Error("title normalization failed");
  }
  norm.toLower(icu::Locale::getRoot());
  // Lowercasing can denormalize (e.g. dotted capital I).
  norm = nfc->normalize(norm, status);

  std::vector<std::string> words;
  icu::UnicodeString cur;
  auto flush = [&] {
    if (!cur.isEmpty()) {
      std::string s;
      cur.toUTF8String(s);
      words.push_back(std::move(s));
      cur.remove();
    }
  };
  for (int32_t i = 0; i < norm.length();) {
    UChar32 c = norm.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      flush();
    } else if (u_isalnum(c)) {
      cur.append(c);
    }
  }
  flush();
  return words;
}

std::size_t wordLevenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& s = a.size() < b.size() ? b : a;
  const auto& t = a.size() < b.size() ? a : b;
  std::vector<std::size_t> row(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) {
    row[j] = j;
  }
  for (std::size_t i = 1; i <= s.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (s[i - 1] == t[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[t.size()];
}

bool isFuzzyMatch(const std::vector<std::string>& a, const std::vector<std::string>& b, const FuzzyMatchParams& p,
                  std::size_t* distance) {
  double lo = static_cast<double>(std::min(a.size(), b.size()));
  double hi = static_cast<double>(std::max(a.size(), b.size()));
  if (!(hi - lo < p.len_ratio * lo)) {
    return false;
  }
  // Distance is at least the length difference; cheap reject before the DP.
  if (hi - lo > p.dist_ratio * hi) {
    return false;
  }
  std::size_t d = wordLevenshtein(a, b);
  if (d == 0 || static_cast<double>(d) > p.dist_ratio * hi) {
    return false;
  }
  if (distance) {
    *distance = d;
  }
  return true;
}

namespace {

void sortPairs(std::vector<TitlePair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const TitlePair& x, const TitlePair& y) {
    if (x.ratio != y.ratio) {
      return x.ratio < y.ratio;
    }
    if (x.left_id != y.left_id) {
      return x.left_id < y.left_id;
    }
    return x.right_id < y.right_id;
  });
}

} // namespace

std::vector<TitlePair> fuzzyCandidates(const std::vector<TitleRecord>& left, const std::vector<TitleRecord>& right,
                                       const FuzzyMatchParams& p, int workers) {
  p.validate();
  std::vector<std::vector<TitlePair>> shards(left.size());
  parallelFor(left.size(), workers, [&](std::size_t i) {
    const auto& l = left[i];
    if (l.words.empty()) {
      return;
    }
    for (const auto& r : right) {
      if (r.words.empty()) {
        continue;
      }
      std::size_t d = 0;
      if (isFuzzyMatch(l.words, r.words, p, &d)) {
        double longer = static_cast<double>(std::max(l.words.size(), r.words.size()));
        shards[i].push_back({l.id, r.id, d, static_cast<double>(d) / longer});
      }
    }
  });
  std::vector<TitlePair> out;
  for (auto& s : shards) {
    out.insert(out.end(), s.begin(), s.end());
  }
  sortPairs(out);
  return out;
}

std::set<std::string> FilterResult::removed() const {
  std::set<std::string> all = removed_by_id;
  all.insert(removed_by_title.begin(), removed_by_title.end());
  all.insert(removed_by_verdict.begin(), removed_by_verdict.end());
  return all;
}

FilterResult filterCorpus(const std::vector<TitleRecord>& corpus, const std::vector<TitleRecord>& held_out,
                          const FuzzyMatchParams& p, const std::vector<PairVerdict>& verdicts, int workers) {
  p.validate();
  std::set<std::string> corpus_ids;
  for (const auto& r : corpus) {
    if (!corpus_ids.insert(r.id).second) {
      throw InvalidArgument("duplicate corpus id '" + r.id + "'");
    }
  }
  std::set<std::string> held_ids;
  std::set<std::vector<std::string>> held_titles;
  for (const auto& r : held_out) {
    held_ids.insert(r.id);
    if (!r.words.empty()) {
      held_titles.insert(r.words);
    }
  }
  for (const auto& v : verdicts) {
    if (!corpus_ids.count(v.left_id) || !held_ids.count(v.right_id)) {
      throw InvalidArgument("verdict references unknown pair (" + v.left_id + ", " + v.right_id + ")");
    }
  }

  FilterResult res;
  std::vector<TitleRecord> remaining;
  for (const auto& r : corpus) {
    if (held_ids.count(r.id)) {
      res.removed_by_id.insert(r.id);
    } else if (!r.words.empty() && held_titles.count(r.words)) {
      res.removed_by_title.insert(r.id);
    } else {
      remaining.push_back(r);
    }
  }

  auto candidates = fuzzyCandidates(remaining, held_out, p, workers);
  std::map<std::pair<std::string, std::string>, Verdict> decided;
  for (const auto& v : verdicts) {
    auto [it, inserted] = decided.emplace(std::make_pair(v.left_id, v.right_id), v.verdict);
    if (!inserted && it->second != v.verdict) {
      throw InvalidArgument("conflicting verdicts for (" + v.left_id + ", " + v.right_id + ")");
    }
  }
  for (const auto& c : candidates) {
    auto it = decided.find({c.left_id, c.right_id});
    if (it == decided.end()) {
      res.pending.push_back(c);
    } else if (it->second == Verdict::kRemove) {
      res.removed_by_verdict.insert(c.left_id);
    }
  }
  // A book removed through one pair leaves nothing to decide for its other pairs.
  std::erase_if(res.pending, [&](const TitlePair& c) { return res.removed_by_verdict.count(c.left_id) > 0; });
  for (const auto& r : remaining) {
    if (!res.removed_by_verdict.count(r.id)) {
      res.kept.insert(r.id);
    }
  }
  return res;
}

std::vector<TitleRecord> readTitles(std::istream& in) {
  std::vector<TitleRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (trim(line).empty()) {
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError("title line " + std::to_string(line_no) + ": expected id<TAB>title");
    }
    out.push_back(TitleRecord::make(line.substr(0, tab), line.substr(tab + 1)));
  }
  return out;
}

std::vector<TitleRecord> readTitlesFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open title file '" + path + "'");
  }
  return readTitles(in);
}

std::vector<PairVerdict> readVerdicts(std::istream& in) {
  std::vector<PairVerdict> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    auto f = splitChar(trim(line), '\t');
    auto where = "verdict line " + std::to_string(line_no) + ": ";
    if (f.size() != 3) {
      throw FormatError(where + "expected left_id, right_id, remove|keep");
    }
    PairVerdict v{f[0], f[1], Verdict::kKeep};
    if (f[2] == "remove") {
      v.verdict = Verdict::kRemove;
    } else if (f[2] != "keep") {
      throw FormatError(where + "verdict must be 'remove' or 'keep'");
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<PairVerdict> readVerdictsFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open verdict file '" + path + "'");
  }
  return readVerdicts(in);
}

void writePending(const std::vector<TitlePair>& pending, const std::vector<TitleRecord>& corpus,
                  const std::vector<TitleRecord>& held_out, std::ostream& out) {
  std::unordered_map<std::string, const TitleRecord*> l, r;
  for (const auto& x : corpus) {
    l[x.id] = &x;
  }
  for (const auto& x : held_out) {
    r[x.id] = &x;
  }
  out << "left_id\tright_id\tdistance\tratio\tleft_title\tright_title\n";
  for (const auto& p : pending) {
    out << p.left_id << '\t' << p.right_id << '\t' << p.distance << '\t' << formatDouble(p.ratio) << '\t'
        << join(l.at(p.left_id)->words, " ") << '\t' << join(r.at(p.right_id)->words, " ") << '\n';
  }
}

} // namespace plkit
