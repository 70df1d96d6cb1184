#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "plkit/tune.h"

using namespace plkit;

TEST(Grid, InclusiveEndpointsAndCleanValues) {
  GridAxis a{"x", 0, 1, 0.1};
  EXPECT_EQ(a.count(), 11u);
  EXPECT_EQ(a.value(3), 0.3);
  EXPECT_EQ(a.value(10), 1.0);
  GridAxis b{"y", -0.3, 0.3, 0.1};
  EXPECT_EQ(b.count(), 7u);
  EXPECT_EQ(b.value(3), 0.0);
  GridAxis bad{"z", 0, 1, 0};
  EXPECT_THROW(bad.count(), InvalidArgument);
}

TEST(Grid, FirstAxisSlowest) {
  std::vector<GridAxis> axes{{"a", 0, 1, 1}, {"b", 0, 2, 1}};
  auto p = gridPoints(axes);
  ASSERT_EQ(p.size(), 6u);
  EXPECT_EQ(p[0].at("a"), 0);
  EXPECT_EQ(p[2].at("b"), 2);
  EXPECT_EQ(p[3].at("a"), 1);
}

TEST(Random, PointsStayInsideSpaceAndAreSeeded) {
  for (const auto& [name, s] : builtinSpaces()) {
    if (s.strategy != Strategy::kRandom) {
      continue;
    }
    RandomSearchOptions o;
    o.trials = 64;
    o.seed = 17;
    auto p = randomPoints(s.space, o);
    ASSERT_EQ(p.size(), 64u) << name;
    for (const auto& x : p) {
      EXPECT_TRUE(s.space.contains(x)) << name;
    }
    EXPECT_EQ(p, randomPoints(s.space, o));
    o.seed = 18;
    if (!s.space.discrete() || s.space.discreteSize() > 1) {
      EXPECT_NE(p, randomPoints(s.space, o)) << name;
    }
  }
}

TEST(Random, ResultsIndependentOfWorkers) {
  const auto& s = builtinSpace("s2s-ngram");
  RandomSearchOptions o;
  o.trials = 40;
  o.seed = 3;
  Objective f = [](const ParamSet& p) { return std::abs(p.at("lm_weight") - 0.7) + std::abs(p.at("eos_penalty") + 2); };
  auto one = randomSearch(s.space, o, f);
  o.workers = 4;
  auto four = randomSearch(s.space, o, f);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].index, four[i].index);
    EXPECT_EQ(one[i].params, four[i].params);
    EXPECT_EQ(one[i].wer, four[i].wer);
  }
  for (std::size_t i = 1; i < one.size(); ++i) {
    EXPECT_LE(one[i - 1].wer, one[i].wer);
  }
}

TEST(Random, WithoutReplacementIsDistinct) {
  SearchSpace s;
  s.add("beam", ParamSpec::choice({20, 50, 100})).add("tb", ParamSpec::choice({3, 5, 10}));
  RandomSearchOptions o;
  o.trials = 100;
  o.without_replacement = true;
  auto p = randomPoints(s, o);
  EXPECT_EQ(p.size(), 9u);
  std::set<ParamSet> uniq(p.begin(), p.end());
  EXPECT_EQ(uniq.size(), 9u);
}

TEST(Trials, FailuresSortLast) {
  std::vector<ParamSet> pts{{{"x", 1}}, {{"x", 2}}, {{"x", 3}}};
  auto r = evaluatePoints(pts, [](const ParamSet& p) -> double {
    if (p.at("x") == 2) {
      throw Error("boom");
    }
    return 1.0 / p.at("x");
  }, 2);
  EXPECT_EQ(r[0].index, 2u);
  EXPECT_EQ(r[1].index, 0u);
  EXPECT_FALSE(r[2].ok());
  EXPECT_EQ(r[2].error, "boom");
  std::ostringstream out;
  writeTrials(r, out);
  EXPECT_EQ(out.str(), "trial\twer\tparams\terror\n2\t0.3333333333333333\tx=3\t\n0\t1\tx=1\t\n1\tinf\tx=2\tboom\n");
}

TEST(Catalog, DecodeSpaces) {
  const auto& ctc = builtinSpace("ctc-ngram");
  EXPECT_EQ(ctc.space.at("beam"), ParamSpec::fixed(500));
  EXPECT_EQ(ctc.space.at("lm_weight"), ParamSpec::range(0, 3));
  EXPECT_EQ(ctc.space.at("word_insertion"), ParamSpec::range(-3, 3));
  const auto& lv = builtinSpace("librivox-s2s-gcnn");
  EXPECT_EQ(lv.space.at("lm_weight"), ParamSpec::range(0, 0.8));
  EXPECT_EQ(lv.space.at("token_beam"), ParamSpec::choice({3, 5, 10}));
  EXPECT_EQ(builtinSpace("s2s-gcnn").space.at("token_beam"), ParamSpec::choice({10, 18}));
  EXPECT_EQ(builtinSpace("rescore-s2s-random").plannedEvaluations(), 1000u);
  EXPECT_THROW(builtinSpace("nope"), InvalidArgument);
  EXPECT_EQ(documentedOptimalLmWeights().size(), 16u);
}

TEST(SpaceFile, Parses) {
  std::istringstream in("# comment\nbeam fixed 50\ntb choice 3,5\nlm range 0 1.5\n");
  auto s = parseSearchSpace(in);
  EXPECT_EQ(s.params().size(), 3u);
  EXPECT_EQ(s.at("tb"), ParamSpec::choice({3, 5}));
  std::istringstream bad("lm range 2 1\n");
  EXPECT_THROW(parseSearchSpace(bad), FormatError);
}

TEST(Random, WithoutReplacementFindsGlobalOptimum) {
  SearchSpace s;
  s.add("a", ParamSpec::choice({0, 0.5, 1, 1.5})).add("b", ParamSpec::choice({-1, 0, 1})).add("c", ParamSpec::fixed(2));
  Objective f = [](const ParamSet& p) { return std::pow(p.at("a") - 1.1, 2) + std::abs(p.at("b") + 0.2); };
  double best = 1e300;
  for (double a : {0.0, 0.5, 1.0, 1.5}) {
    for (double b : {-1.0, 0.0, 1.0}) best = std::min(best, f({{"a", a}, {"b", b}, {"c", 2}}));
  }
  RandomSearchOptions o;
  o.trials = 12;
  o.seed = 17;
  o.without_replacement = true;
  EXPECT_EQ(randomSearch(s, o, f).front().wer, best);
}

TEST(Random, BestTrialReproducesStandalone) {
  const auto& s = builtinSpace("ctc-ngram");
  Objective f = [](const ParamSet& p) {
    return std::sin(p.at("lm_weight") * 3) + p.at("word_insertion") * p.at("word_insertion") / 7;
  };
  RandomSearchOptions o;
  o.trials = 64;
  o.seed = 8;
  o.workers = 3;
  auto r = randomSearch(s.space, o, f);
  EXPECT_EQ(f(r.front().params), r.front().wer);
  EXPECT_EQ(randomPoints(s.space, o)[r.front().index], r.front().params);
}
