#include "plkit/pipeline.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "plkit/emissions.h"
#include "plkit/parallel.h"

namespace plkit {

std::vector<ManifestRow> readManifest(std::istream& in) {
  std::vector<ManifestRow> rows;
  std::set<std::string> seen;
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
    auto f = splitChar(line, '\t');
    auto where = "manifest line " + std::to_string(line_no) + ": ";
    if (f.size() < 2 || f.size() > 4 || f[0].empty() || f[1].empty()) {
      throw FormatError(where + "expected utt_id, path[, reference[, duration]]");
    }
    ManifestRow r{f[0], f[1], std::nullopt, std::nullopt};
    if (f.size() >= 3 && !f[2].empty()) {
      r.reference = f[2];
    }
    if (f.size() == 4 && !f[3].empty()) {
      try {
        r.duration = parseDouble(f[3], "duration");
      } catch (const Error& e) {
        throw FormatError(where + e.what());
      }
      if (*r.duration < 0) {
        throw FormatError(where + "negative duration");
      }
    }
    if (!seen.insert(r.utt_id).second) {
      throw FormatError(where + "duplicate utt_id '" + r.utt_id + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ManifestRow> readManifestFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open manifest '" + path + "'");
  }
  return readManifest(in);
}

namespace {

void writeRow(const ManifestRow& r, std::ostream& out) {
  out << r.utt_id << '\t' << r.path << '\t' << r.reference.value_or("") << '\t'
      << (r.duration ? formatDouble(*r.duration) : std::string());
}

} // namespace

void writeManifest(const std::vector<ManifestRow>& rows, std::ostream& out) {
  for (const auto& r : rows) {
    writeRow(r, out);
    out << '\n';
  }
}

void mergeManifests(const std::vector<TaggedManifest>& inputs, std::ostream& out) {
  std::set<std::string> seen;
  for (const auto& m : inputs) {
    for (const auto& r : m.rows) {
      if (!seen.insert(r.utt_id).second) {
        throw InvalidArgument("utt_id '" + r.utt_id + "' appears in more than one manifest");
      }
    }
  }
  for (const auto& m : inputs) {
    for (const auto& r : m.rows) {
      writeRow(r, out);
      out << '\t' << m.source << '\n';
    }
  }
}

std::vector<Chunk> chunkIntervals(const std::vector<Interval>& intervals, double max_chunk) {
  if (!(max_chunk > 0) || !std::isfinite(max_chunk)) {
    throw InvalidArgument("max_chunk must be > 0");
  }
  std::vector<Interval> pieces;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& iv = intervals[i];
    if (!std::isfinite(iv.start) || !std::isfinite(iv.end) || iv.start < 0 || iv.end < iv.start) {
      throw InvalidArgument("interval " + std::to_string(i) + " is not a valid [start, end]");
    }
    if (i > 0 && iv.start < intervals[i - 1].end) {
      throw InvalidArgument("intervals must be sorted and non-overlapping (interval " + std::to_string(i) + ")");
    }
    double s = iv.start;
    while (iv.end - s > max_chunk) {
      double cut = s + max_chunk;
      // s + max_chunk can round up past the limit.
      while (cut - s > max_chunk) {
        cut = std::nextafter(cut, s);
      }
      pieces.push_back({s, cut});
      s = cut;
    }
    pieces.push_back({s, iv.end});
  }
  std::vector<Chunk> chunks;
  for (const auto& p : pieces) {
    if (!chunks.empty() && p.end - chunks.back().start <= max_chunk) {
      chunks.back().end = p.end;
      chunks.back().pieces.push_back(p);
    } else {
      chunks.push_back({p.start, p.end, {p}});
    }
  }
  return chunks;
}

std::vector<Interval> readIntervals(std::istream& in) {
  std::vector<Interval> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto f = splitWhitespace(line);
    if (f.empty()) {
      continue;
    }
    if (f.size() != 2) {
      throw FormatError("interval line " + std::to_string(line_no) + ": expected start end");
    }
    try {
      out.push_back({parseDouble(f[0], "start"), parseDouble(f[1], "end")});
    } catch (const Error& e) {
      throw FormatError("interval line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string resolvePath(const std::string& root, const std::string& path) {
  std::filesystem::path p(path);
  if (root.empty() || p.is_absolute()) {
    return path;
  }
  return (std::filesystem::path(root) / p).string();
}

DecodeResult decodeFile(const std::string& path, const std::string& utt_id, const DecodeSetup& setup) {
  if (setup.inventory == nullptr) {
    throw InvalidArgument("decode setup needs a token inventory");
  }
  const auto& opt = setup.options;
  DecodeResult res;
  switch (opt.mode) {
    case DecodeMode::kLexiconCtc:
    case DecodeMode::kZeroLmCtc: {
      if (setup.trie == nullptr) {
        throw InvalidArgument("CTC lexicon decoding needs a lexicon");
      }
      res = decodeCtc(readEmissionsFile(path), *setup.inventory, *setup.trie, setup.lm, opt);
      break;
    }
    case DecodeMode::kLexfreeS2s:
    case DecodeMode::kZeroLmS2s: {
      auto scorer = ReplayScorer::loadFile(path, static_cast<int>(setup.inventory->size()));
      res = decodeS2s(scorer, *setup.inventory, setup.lm, opt);
      break;
    }
    case DecodeMode::kGreedy: {
      auto em = readEmissionsFile(path);
      if (static_cast<std::size_t>(em.vocab()) != setup.inventory->size()) {
        throw InvalidArgument("emission width does not match inventory size");
      }
      NBestEntry e;
      for (int t = 0; t < em.frames(); ++t) {
        auto row = em.row(t);
        e.am_score += *std::max_element(row.begin(), row.end());
      }
      auto tokens = greedyCtc(em, *setup.inventory);
      e.words = piecesToWords(tokens, *setup.inventory, opt.word_boundary);
      e.char_len = charLength(e.words);
      e.score = e.am_score;
      res.nbest.push_back(std::move(e));
      break;
    }
  }
  for (auto& e : res.nbest) {
    e.utt_id = utt_id;
  }
  return res;
}

PseudoLabelResult pseudoLabel(const std::vector<ManifestRow>& manifest, const DecodeSetup& setup,
                              const std::string& root, int workers) {
  setup.options.validate();
  std::vector<DecodeResult> results(manifest.size());
  std::vector<std::string> errors(manifest.size());
  parallelFor(manifest.size(), workers, [&](std::size_t i) {
    try {
      results[i] = decodeFile(resolvePath(root, manifest[i].path), manifest[i].utt_id, setup);
      if (results[i].nbest.empty()) {
        errors[i] = "decoder produced no hypothesis";
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::vector<std::size_t> order(manifest.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return manifest[a].utt_id < manifest[b].utt_id; });
  PseudoLabelResult out;
  for (auto i : order) {
    if (!errors[i].empty()) {
      out.errors.emplace_back(manifest[i].utt_id, errors[i]);
      continue;
    }
    out.labels.emplace_back(manifest[i].utt_id, results[i].nbest.front().transcript());
    out.nbest.insert(out.nbest.end(), results[i].nbest.begin(), results[i].nbest.end());
  }
  return out;
}

void writeLabels(const PseudoLabelResult& r, std::ostream& out) {
  for (const auto& [id, text] : r.labels) {
    out << id << '\t' << text << '\n';
  }
}

std::vector<std::vector<std::string>> readTextCorpus(std::istream& in) {
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view body = line;
    auto tab = body.rfind('\t');
    if (tab != std::string_view::npos) {
      body = body.substr(tab + 1);
    }
    auto words = splitWhitespace(body);
    if (!words.empty()) {
      out.push_back(std::move(words));
    }
  }
  return out;
}

std::vector<std::vector<std::string>> readTextCorpusFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open text file '" + path + "'");
  }
  return readTextCorpus(in);
}

} // namespace plkit
