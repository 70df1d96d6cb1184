#include <gtest/gtest.h>

#include <numbers>
#include <set>
#include <random>
#include <sstream>

#include "oracles.h"
#include "plkit/rescore.h"
#include "plkit/tune.h"

using namespace plkit;

namespace {

std::vector<ScoredNBest> randomList(std::mt19937_64& rng, const std::string& utt, int n) {
  std::uniform_real_distribution<double> u(-20, 0);
  std::uniform_int_distribution<int> len(0, 4);
  std::uniform_int_distribution<int> letter(0, 3);
  std::vector<ScoredNBest> out;
  for (int i = 0; i < n; ++i) {
    NBestEntry e;
    e.utt_id = utt;
    int k = len(rng);
    for (int j = 0; j < k; ++j) {
      e.words.push_back(std::string(1 + static_cast<std::size_t>(letter(rng)), static_cast<char>('a' + letter(rng))));
    }
    e.char_len = charLength(e.words);
    e.am_score = u(rng);
    out.push_back({e, u(rng), u(rng)});
  }
  return out;
}

} // namespace

TEST(Rescore, ArgmaxMatchesBruteForce) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> w(-2, 2);
  for (int i = 0; i < 200; ++i) {
    auto list = randomList(rng, "u", 1 + i % 12);
    RescoreWeights rw{w(rng), w(rng), w(rng)};
    auto ranked = rescore(list, rw);
    EXPECT_EQ(ranked.front().words, oracle::rescoreArgmax(list, rw.alpha1, rw.alpha2, rw.beta)) << i;
    for (std::size_t k = 1; k < ranked.size(); ++k) {
      EXPECT_GE(ranked[k - 1].score, ranked[k].score);
    }
  }
}

TEST(Rescore, ZeroWeightsKeepAcousticOrder) {
  std::mt19937_64 rng(1);
  auto list = randomList(rng, "u", 20);
  auto ranked = rescore(list, {0, 0, 0});
  for (std::size_t k = 1; k < ranked.size(); ++k) {
    EXPECT_GE(ranked[k - 1].am_score, ranked[k].am_score);
  }
}

TEST(Rescore, GroupsKeepFirstAppearanceOrder) {
  std::mt19937_64 rng(2);
  auto a = randomList(rng, "zeta", 3);
  auto b = randomList(rng, "alpha", 2);
  std::vector<ScoredNBest> all;
  all.push_back(a[0]);
  all.push_back(b[0]);
  all.push_back(a[1]);
  all.push_back(b[1]);
  all.push_back(a[2]);
  auto r = rescore(all, {0.5, 0.1, 0.2});
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r[0].utt_id, "zeta");
  EXPECT_EQ(r[2].utt_id, "zeta");
  EXPECT_EQ(r[3].utt_id, "alpha");
}

TEST(Rescore, CharLengthCountsCodePointsAndSpaces) {
  std::vector<std::string> w{"naïve", "café"};
  EXPECT_EQ(charLength(w), 10);
  EXPECT_EQ(charLength(std::vector<std::string>{}), 0);
}

TEST(Rescore, ScoreSources) {
  std::vector<NBestEntry> entries = {{"u", {"a"}, -1, 0, 1, 0}, {"u", {"b"}, -2, 0, 1, 0}, {"v", {"a"}, -3, 0, 1, 0}};
  std::istringstream s("u\t0\t-5\nu\t1\t-6\nv\t0\t-7\n");
  auto ext = ExternalScores::load(s);
  auto scored = attachScores(entries, &ext, 2.5);
  EXPECT_DOUBLE_EQ(scored[1].lm1_log, -6);
  EXPECT_DOUBLE_EQ(scored[2].lm1_log, -7);
  EXPECT_DOUBLE_EQ(scored[0].lm2_log, 2.5);

  std::istringstream partial("u\t0\t-5\n");
  auto missing = ExternalScores::load(partial);
  try {
    attachScores(entries, &missing, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("(u, 1)"), std::string::npos);
  }

  std::istringstream arpa("\\data\\\nngram 1=3\n\n\\1-grams:\n-1\t</s>\n-0.5\ta\n-0.25\tb\n\n\\end\\\n");
  auto lm = loadArpa(arpa);
  auto with_lm = attachScores(entries, &lm, 0.0);
  EXPECT_NEAR(with_lm[0].lm1_log, std::numbers::ln10 * (-0.5 - 1), 1e-12);
}

TEST(Rescore, CtcGridHas847Points) {
  const auto& s = builtinSpace("rescore-ctc-grid");
  EXPECT_EQ(s.plannedEvaluations(), 847u);
  auto axes = s.axes();
  EXPECT_EQ(gridPoints(axes).size(), 847u);
}

TEST(Rescore, ShiftingAmKeepsTopAndIsPermutation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> w(-2, 2), shift(-50, 50);
  for (int i = 0; i < 100; ++i) {
    auto list = randomList(rng, "u", 2 + i % 10);
    RescoreWeights rw{w(rng), w(rng), w(rng)};
    auto base = rescore(list, rw);
    auto shifted = list;
    double c = shift(rng);
    for (auto& s : shifted) s.entry.am_score += c;
    EXPECT_EQ(rescore(shifted, rw).front().words, base.front().words) << i;
    std::multiset<std::vector<std::string>> in, out;
    for (const auto& s : list) in.insert(s.entry.words);
    for (const auto& e : base) out.insert(e.words);
    EXPECT_EQ(in, out);
  }
}

TEST(Rescore, Alpha1CrossoverIsWhereRanksFlip) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-10, 0);
  for (int i = 0; i < 50; ++i) {
    auto list = randomList(rng, "u", 2);
    list[0].entry.words = {"x"};
    list[1].entry.words = {"y"};
    list[0].entry.char_len = list[1].entry.char_len = 1;
    if (std::abs(list[0].lm1_log - list[1].lm1_log) < 1e-3) continue;
    // am0 + a*l0 = am1 + a*l1
    double cross = (list[1].entry.am_score - list[0].entry.am_score) / (list[0].lm1_log - list[1].lm1_log);
    auto top = [&](double a) { return rescore(list, {a, 0, 0}).front().words; };
    EXPECT_NE(top(cross - 1e-9), top(cross + 1e-9)) << i;
  }
}
