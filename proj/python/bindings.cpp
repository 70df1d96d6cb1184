#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "plkit/corpus.h"
#include "plkit/decoder.h"
#include "plkit/emissions.h"
#include "plkit/evalkit.h"
#include "plkit/lexicon.h"
#include "plkit/lm.h"
#include "plkit/pipeline.h"
#include "plkit/rescore.h"
#include "plkit/tune.h"

namespace py = pybind11;
using namespace plkit;

namespace {

using Corpus = std::vector<std::vector<std::string>>;

NGramModel arpaFromText(const std::string& text, const std::string& unit) {
  std::istringstream in(text);
  return loadArpa(in, parseTokenUnit(unit));
}

std::string arpaToText(const NGramModel& m) {
  std::ostringstream out;
  saveArpa(m, out);
  return out.str();
}

EmissionMatrix fromArray(py::array_t<float, py::array::c_style | py::array::forcecast> a, bool normalized) {
  if (a.ndim() != 2) {
    throw InvalidArgument("emissions must be a 2-D array");
  }
  std::vector<float> v(a.data(), a.data() + a.size());
  return EmissionMatrix(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), std::move(v), normalized);
}

py::array_t<float> toArray(const EmissionMatrix& m) {
  py::array_t<float> a({m.frames(), m.vocab()});
  std::copy(m.values().begin(), m.values().end(), a.mutable_data());
  return a;
}

std::vector<TitleRecord> titles(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::vector<TitleRecord> out;
  for (const auto& [id, raw] : rows) {
    out.push_back(TitleRecord::make(id, raw));
  }
  return out;
}

} // namespace

PYBIND11_MODULE(_plkit, m) {
  m.doc() = "Decoding, rescoring and corpus utilities for pseudo-labelling";

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  // LM
  py::class_<NGramModel>(m, "NGramModel")
      .def_property_readonly("max_order", &NGramModel::maxOrder)
      .def_property_readonly("vocab_size", [](const NGramModel& lm) { return lm.vocab().size(); })
      .def("entry_count", &NGramModel::entryCount)
      .def("score_sentence",
           [](const NGramModel& lm, const std::vector<std::string>& words, bool markers) {
             return lm.scoreSentence(words, markers).total_log10;
           },
           py::arg("words"), py::arg("markers") = true)
      .def("to_arpa", &arpaToText);
  m.def(
      "load_arpa", [](const std::string& path, const std::string& unit) { return loadArpaFile(path, parseTokenUnit(unit)); },
      py::arg("path"), py::arg("unit") = "word");
  m.def("arpa_from_text", &arpaFromText, py::arg("text"), py::arg("unit") = "word");
  m.def(
      "train_lm",
      [](const Corpus& corpus, int order, std::vector<int> prune, double discount, const std::string& unit) {
        return train(corpus, {order, std::move(prune), discount, parseTokenUnit(unit)});
      },
      py::arg("corpus"), py::arg("order") = 3, py::arg("prune") = std::vector<int>{}, py::arg("discount") = 0.75,
      py::arg("unit") = "word");
  m.def("perplexity", &perplexity, py::arg("lm"), py::arg("corpus"), py::arg("markers") = true);

  // Tokens, lexicon, emissions
  py::class_<TokenInventory>(m, "TokenInventory")
      .def(py::init<std::vector<std::string>, std::string_view, std::string_view>(), py::arg("tokens"),
           py::arg("blank") = kDefaultBlank, py::arg("eos") = kDefaultEos)
      .def("__len__", &TokenInventory::size)
      .def("find", &TokenInventory::find)
      .def_property_readonly("tokens", &TokenInventory::tokens);
  py::class_<LexiconTrie>(m, "Lexicon")
      .def(py::init([](const std::string& text, const TokenInventory& inv) {
             std::istringstream in(text);
             return LexiconTrie(parseLexicon(in, inv));
           }),
           py::arg("text"), py::arg("inventory"))
      .def("__len__", [](const LexiconTrie& t) { return t.lexicon().size(); })
      .def_property_readonly("node_count", &LexiconTrie::nodeCount);
  m.def(
      "load_lexicon",
      [](const std::string& path, const TokenInventory& inv) { return LexiconTrie(loadLexiconFile(path, inv)); },
      py::arg("path"), py::arg("inventory"));

  py::class_<EmissionMatrix>(m, "Emissions")
      .def(py::init(&fromArray), py::arg("log_probs"), py::arg("normalized") = true)
      .def_property_readonly("frames", &EmissionMatrix::frames)
      .def_property_readonly("vocab", &EmissionMatrix::vocab)
      .def("numpy", &toArray)
      .def("validate", &EmissionMatrix::validate)
      .def("save", [](const EmissionMatrix& e, const std::string& path) { writeEmissionsFile(e, path); });
  m.def("read_emissions", &readEmissionsFile, py::arg("path"));
  m.def(
      "synth_emissions",
      [](const std::vector<TokenId>& tokens, const TokenInventory& inv, double noise, int fpt, uint64_t seed) {
        return synthEmissions(tokens, inv, noise, fpt, seed);
      },
      py::arg("tokens"), py::arg("inventory"), py::arg("noise") = 0.0,
        py::arg("frames_per_token") = 2, py::arg("seed") = 0);

  py::class_<ReplayScorer>(m, "ReplayScorer")
      .def(py::init<int>(), py::arg("vocab"))
      .def("set", &ReplayScorer::set, py::arg("prefix"), py::arg("log_probs"))
      .def("next", [](const ReplayScorer& r, const std::vector<TokenId>& p) { return r.next(p); });

  // Decoding
  py::class_<DecodeOptions>(m, "DecodeOptions")
      .def(py::init<>())
      .def_readwrite("beam", &DecodeOptions::beam)
      .def_readwrite("token_beam", &DecodeOptions::token_beam)
      .def_readwrite("beam_threshold", &DecodeOptions::beam_threshold)
      .def_readwrite("lm_weight", &DecodeOptions::lm_weight)
      .def_readwrite("word_insertion", &DecodeOptions::word_insertion)
      .def_readwrite("eos_penalty", &DecodeOptions::eos_penalty)
      .def_readwrite("blank_threshold", &DecodeOptions::blank_threshold)
      .def_readwrite("max_output_len", &DecodeOptions::max_output_len)
      .def_readwrite("nbest", &DecodeOptions::nbest)
      .def_readwrite("word_boundary", &DecodeOptions::word_boundary)
      .def_property(
          "mode", [](const DecodeOptions& o) { return std::string(toString(o.mode)); },
          [](DecodeOptions& o, const std::string& s) { o.mode = parseDecodeMode(s); })
      .def_property(
          "merge_rule", [](const DecodeOptions& o) { return std::string(toString(o.merge_rule)); },
          [](DecodeOptions& o, const std::string& s) { o.merge_rule = parseMergeRule(s); });

  py::class_<NBestEntry>(m, "NBestEntry")
      .def(py::init<>())
      .def_readwrite("utt_id", &NBestEntry::utt_id)
      .def_readwrite("words", &NBestEntry::words)
      .def_readwrite("am_score", &NBestEntry::am_score)
      .def_readwrite("lm_score_raw", &NBestEntry::lm_score_raw)
      .def_readwrite("char_len", &NBestEntry::char_len)
      .def_readwrite("score", &NBestEntry::score)
      .def_property_readonly("transcript", &NBestEntry::transcript)
      .def("__repr__", [](const NBestEntry& e) { return "<NBestEntry '" + e.transcript() + "'>"; });

  m.def(
      "decode_ctc",
      [](const EmissionMatrix& em, const TokenInventory& inv, const LexiconTrie& lex, const NGramModel* lm,
         const DecodeOptions& opt) {
        py::gil_scoped_release release;
        return decodeCtc(em, inv, lex, lm, opt).nbest;
      },
      py::arg("emissions"), py::arg("inventory"), py::arg("lexicon"), py::arg("lm").none(true),
      py::arg("options") = DecodeOptions{});
  m.def(
      "decode_s2s",
      [](const ReplayScorer& scorer, const TokenInventory& inv, const NGramModel* lm, const DecodeOptions& opt) {
        auto r = decodeS2s(scorer, inv, lm, opt);
        return py::make_tuple(r.nbest, r.status == DecodeStatus::kOk);
      },
      py::arg("scorer"), py::arg("inventory"), py::arg("lm").none(true), py::arg("options"));
  m.def("greedy_ctc", &greedyCtc, py::arg("emissions"), py::arg("inventory"));

  // Rescoring and tuning
  m.def(
      "rescore",
      [](const std::vector<NBestEntry>& entries, const std::vector<double>& lm1, const std::vector<double>& lm2,
         double alpha1, double alpha2, double beta) {
        if (lm1.size() != entries.size() || lm2.size() != entries.size()) {
          throw InvalidArgument("one lm1 and one lm2 score per entry");
        }
        std::vector<ScoredNBest> s;
        for (std::size_t i = 0; i < entries.size(); ++i) {
          s.push_back({entries[i], lm1[i], lm2[i]});
        }
        return rescore(s, {alpha1, alpha2, beta});
      },
      py::arg("entries"), py::arg("lm1"), py::arg("lm2"), py::arg("alpha1") = 0.0, py::arg("alpha2") = 0.0,
      py::arg("beta") = 0.0);
  m.def("builtin_spaces", [] {
    std::vector<std::string> names;
    for (const auto& [name, s] : builtinSpaces()) {
      names.push_back(name);
    }
    return names;
  });
  m.def("planned_evaluations", [](const std::string& name) { return builtinSpace(name).plannedEvaluations(); });
  m.def("grid_points", [](const std::string& name) {
    auto axes = builtinSpace(name).axes();
    return gridPoints(axes);
  });

  // Evaluation and probes
  py::class_<WerBreakdown>(m, "WerBreakdown")
      .def_readonly("substitutions", &WerBreakdown::substitutions)
      .def_readonly("deletions", &WerBreakdown::deletions)
      .def_readonly("insertions", &WerBreakdown::insertions)
      .def_readonly("ref_length", &WerBreakdown::ref_length)
      .def_readonly("wer", &WerBreakdown::wer);
  m.def("wer", &wer, py::arg("reference"), py::arg("hypothesis"));
  m.def("shuffle_transcript", &shuffleTranscript, py::arg("words"), py::arg("seed"));
  m.def(
      "perplexity_probe",
      [](const NGramModel& lm, const Corpus& corpus, uint64_t seed, int trials) {
        auto r = perplexityProbe(lm, corpus, seed, trials);
        return py::make_tuple(r.ppl_original, r.ppl_shuffled_trials);
      },
      py::arg("lm"), py::arg("corpus"), py::arg("seed") = 0, py::arg("trials") = 1);

  // Corpus filtering
  m.def("normalize_title", &normalizeTitle, py::arg("title"));
  m.def("word_levenshtein", &wordLevenshtein, py::arg("a"), py::arg("b"));
  m.def(
      "is_fuzzy_match",
      [](const std::vector<std::string>& a, const std::vector<std::string>& b, double len_ratio, double dist_ratio) {
        return isFuzzyMatch(a, b, {len_ratio, dist_ratio});
      },
      py::arg("a"), py::arg("b"), py::arg("len_ratio") = 0.75, py::arg("dist_ratio") = 0.3);
  m.def(
      "filter_corpus",
      [](const std::vector<std::pair<std::string, std::string>>& corpus,
         const std::vector<std::pair<std::string, std::string>>& held_out,
         const std::vector<std::tuple<std::string, std::string, bool>>& remove_verdicts) {
        std::vector<PairVerdict> v;
        for (const auto& [l, r, remove] : remove_verdicts) {
          v.push_back({l, r, remove ? Verdict::kRemove : Verdict::kKeep});
        }
        auto res = filterCorpus(titles(corpus), titles(held_out), {}, v);
        std::vector<std::pair<std::string, std::string>> pending;
        for (const auto& p : res.pending) {
          pending.emplace_back(p.left_id, p.right_id);
        }
        py::dict d;
        d["kept"] = res.kept;
        d["removed_by_id"] = res.removed_by_id;
        d["removed_by_title"] = res.removed_by_title;
        d["removed_by_verdict"] = res.removed_by_verdict;
        d["pending"] = pending;
        return d;
      },
      py::arg("corpus"), py::arg("held_out"), py::arg("verdicts") = std::vector<std::tuple<std::string, std::string, bool>>{});

  // Chunking
  m.def(
      "chunk_intervals",
      [](const std::vector<std::pair<double, double>>& intervals, double max_chunk) {
        std::vector<Interval> iv;
        for (const auto& [s, e] : intervals) {
          iv.push_back({s, e});
        }
        std::vector<std::pair<double, double>> out;
        for (const auto& c : chunkIntervals(iv, max_chunk)) {
          out.emplace_back(c.start, c.end);
        }
        return out;
      },
      py::arg("intervals"), py::arg("max_chunk") = kDefaultMaxChunk);
}
