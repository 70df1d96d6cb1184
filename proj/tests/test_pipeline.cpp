#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "plkit/emissions.h"
#include "plkit/evalkit.h"
#include "plkit/pipeline.h"

using namespace plkit;
namespace fs = std::filesystem;

TEST(Manifest, ReadWrite) {
  std::istringstream in("u1\ta.emat\thello world\t1.5\nu2\tb.emat\n");
  auto rows = readManifest(in);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(*rows[0].reference, "hello world");
  EXPECT_DOUBLE_EQ(*rows[0].duration, 1.5);
  EXPECT_FALSE(rows[1].reference);
  std::ostringstream out;
  writeManifest(rows, out);
  std::istringstream back(out.str());
  EXPECT_EQ(readManifest(back), rows);
  std::istringstream dup("u1\ta\nu1\tb\n");
  EXPECT_THROW(readManifest(dup), FormatError);
}

TEST(Manifest, MergeTagsAndRejectsDuplicates) {
  std::vector<ManifestRow> a{{"x", "p", {}, {}}}, b{{"y", "q", std::string("hi"), 2.0}};
  std::ostringstream out;
  mergeManifests({{"A", a}, {"B", b}}, out);
  EXPECT_NE(out.str().find("\tA\n"), std::string::npos);
  EXPECT_NE(out.str().find("\tB\n"), std::string::npos);
  std::ostringstream sink;
  EXPECT_THROW(mergeManifests({{"A", a}, {"B", a}}, sink), InvalidArgument);
}

TEST(Chunk, Examples) {
  auto c = chunkIntervals({{0, 10}});
  ASSERT_EQ(c.size(), 1u);
  c = chunkIntervals({{0, 80}});
  ASSERT_EQ(c.size(), 3u);
  EXPECT_DOUBLE_EQ(c[0].span(), 36);
  EXPECT_DOUBLE_EQ(c[1].span(), 36);
  EXPECT_DOUBLE_EQ(c[2].span(), 8);
  c = chunkIntervals({{0, 10}, {12, 30}, {31, 40}});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].pieces.size(), 2u);
  EXPECT_TRUE(chunkIntervals({}).empty());
  EXPECT_THROW(chunkIntervals({{5, 6}, {1, 2}}), InvalidArgument);
  EXPECT_THROW(chunkIntervals({{0, 6}, {5, 7}}), InvalidArgument);
}

TEST(Chunk, RandomSetsStayUnderLimitAndCoverEverything) {
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> len(0.1, 90), gap(0, 20);
  for (int i = 0; i < 200; ++i) {
    std::vector<Interval> iv;
    double t = gap(rng);
    for (int k = static_cast<int>(rng() % 12); k >= 0; --k) {
      double l = len(rng);
      iv.push_back({t, t + l});
      t += l + gap(rng);
    }
    auto chunks = chunkIntervals(iv);
    double covered = 0, total = 0;
    for (const auto& x : iv) total += x.length();
    double prev_end = -1;
    for (const auto& c : chunks) {
      EXPECT_LE(c.span(), 36.0 + 1e-9);
      EXPECT_GE(c.start, prev_end);
      prev_end = c.end;
      for (const auto& p : c.pieces) {
        EXPECT_GE(p.start, c.start);
        EXPECT_LE(p.end, c.end);
        covered += p.length();
      }
    }
    EXPECT_NEAR(covered, total, 1e-6);
  }
}

namespace {

struct Toy {
  TokenInventory inv{{"<blank>", "</s>", "|", "a", "b", "c", "t"}};
  Lexicon lex;
  std::unique_ptr<LexiconTrie> trie;
  NGramModel lm{1};
  fs::path dir;

  Toy() {
    for (std::string w : {"cat", "bat", "tab", "a", "abc"}) {
      std::vector<TokenId> s;
      for (char ch : w) s.push_back(*inv.find(std::string(1, ch)));
      s.push_back(*inv.find("|"));
      lex.add(w, s, inv.size());
    }
    trie = std::make_unique<LexiconTrie>(lex);
    lm = train({{"cat", "bat"}, {"tab", "a", "abc"}}, {});
    dir = fs::temp_directory_path() / ("plkit_pipe_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Toy() { fs::remove_all(dir); }

  std::vector<ManifestRow> synth(const std::vector<std::vector<std::string>>& texts, uint64_t seed) {
    std::vector<ManifestRow> rows;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      std::vector<TokenId> seq;
      for (const auto& w : texts[i]) {
        auto& sp = lex.entry(*lex.find(w)).spellings[0];
        seq.insert(seq.end(), sp.begin(), sp.end());
      }
      std::string id = "utt" + std::to_string(i);
      writeEmissionsFile(synthEmissions(seq, inv, 0.0, 2, seed + i), (dir / (id + ".emat")).string());
      rows.push_back({id, id + ".emat", join(texts[i], " "), {}});
    }
    return rows;
  }

  DecodeSetup setup() {
    DecodeSetup s;
    s.inventory = &inv;
    s.trie = trie.get();
    s.lm = &lm;
    s.options.lm_weight = 0.5;
    s.options.beam = 50;
    return s;
  }
};

} // namespace

TEST(PseudoLabel, NoiselessSynthIsExact) {
  Toy toy;
  std::vector<std::vector<std::string>> texts{{"cat"}, {"bat", "tab"}, {"a", "abc", "cat"}, {"tab", "tab", "a"}};
  auto rows = toy.synth(texts, 3);
  auto r = pseudoLabel(rows, toy.setup(), toy.dir.string());
  EXPECT_TRUE(r.errors.empty());
  ASSERT_EQ(r.labels.size(), texts.size());
  WerBreakdown total;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    EXPECT_EQ(r.labels[i].first, rows[i].utt_id);
    total += wer(texts[i], splitWhitespace(r.labels[i].second));
  }
  EXPECT_EQ(total.errors(), 0);

  // Labels go straight back into training.
  std::ostringstream out;
  writeLabels(r, out);
  std::istringstream in(out.str());
  auto corpus = readTextCorpus(in);
  EXPECT_EQ(corpus, texts);
  EXPECT_NO_THROW(train(corpus, {}).validate());
}

TEST(PseudoLabel, WorkersDoNotChangeOutput) {
  Toy toy;
  std::vector<std::vector<std::string>> texts;
  std::mt19937_64 rng(1);
  const char* words[] = {"cat", "bat", "tab", "a", "abc"};
  for (int i = 0; i < 12; ++i) {
    std::vector<std::string> t;
    for (int k = static_cast<int>(rng() % 4); k >= 0; --k) t.push_back(words[rng() % 5]);
    texts.push_back(t);
  }
  auto rows = toy.synth(texts, 9);
  auto one = pseudoLabel(rows, toy.setup(), toy.dir.string(), 1);
  auto four = pseudoLabel(rows, toy.setup(), toy.dir.string(), 4);
  EXPECT_EQ(one.labels, four.labels);
  EXPECT_EQ(one.nbest, four.nbest);
}

TEST(PseudoLabel, BadRowsAreReported) {
  Toy toy;
  auto rows = toy.synth({{"cat"}}, 1);
  rows.push_back({"missing", "nope.emat", {}, {}});
  std::ofstream(toy.dir / "junk.emat") << "garbage";
  rows.push_back({"junk", "junk.emat", {}, {}});
  auto r = pseudoLabel(rows, toy.setup(), toy.dir.string());
  EXPECT_EQ(r.labels.size(), 1u);
  ASSERT_EQ(r.errors.size(), 2u);
  EXPECT_EQ(r.errors[0].first, "junk");
  EXPECT_EQ(r.errors[1].first, "missing");
  EXPECT_TRUE(pseudoLabel({}, toy.setup()).labels.empty());
}

TEST(PseudoLabel, GreedyMode) {
  Toy toy;
  auto rows = toy.synth({{"bat", "a"}}, 2);
  auto s = toy.setup();
  s.options.mode = DecodeMode::kGreedy;
  s.options.word_boundary = "|";
  auto r = pseudoLabel(rows, s, toy.dir.string());
  ASSERT_EQ(r.labels.size(), 1u);
}

TEST(TextCorpus, TabbedAndBare) {
  std::istringstream in("u1\tthe cat\nthe dog\n\n");
  auto c = readTextCorpus(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (std::vector<std::string>{"the", "cat"}));
  EXPECT_EQ(c[1], (std::vector<std::string>{"the", "dog"}));
}

TEST(Paths, Resolve) {
  EXPECT_EQ(resolvePath("", "a/b"), "a/b");
  EXPECT_EQ(resolvePath("/r", "/abs"), "/abs");
  EXPECT_EQ(resolvePath("/r", "x.emat"), "/r/x.emat");
}
