#include <gtest/gtest.h>

#include <unistd.h>

#include "cli_workspace.h"

namespace fs = std::filesystem;
using cliws::run;
using cliws::slurp;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("plkit_cli_" + std::to_string(::getpid()) + "_" +
           ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    cliws::prepare(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string out() const { return slurp(dir / "stdout.txt"); }
  std::string err() const { return slurp(dir / "stderr.txt"); }
  fs::path dir;
};

} // namespace

TEST_F(Cli, WerOfIdenticalFilesIsZero) {
  ASSERT_EQ(run(dir, "wer text.tsv text.tsv"), 0) << err();
  EXPECT_EQ(out(), "0.00\n");
  ASSERT_EQ(run(dir, "wer text.tsv hyp.tsv"), 0) << err();
  // 1 deletion, 1 substitution, 1 insertion over 12 words.
  EXPECT_EQ(out(), "25.00\n");
}

TEST_F(Cli, GridDryRun) {
  ASSERT_EQ(run(dir, "tune --space rescore-ctc-grid --dry-run"), 0) << err();
  EXPECT_EQ(out(), "847 planned evaluations\n");
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(dir, "no-such-command"), 2);
  EXPECT_EQ(run(dir, "wer text.tsv"), 2);
  EXPECT_EQ(run(dir, "chunk --intervals intervals.txt --max-chunk -1"), 2);
  EXPECT_EQ(run(dir, "wer text.tsv missing.tsv"), 1);
  EXPECT_EQ(run(dir, "lm-perplexity --lm missing.arpa --text train.txt"), 1);
  EXPECT_EQ(run(dir, "--help"), 0);
}

TEST_F(Cli, PartialDecodeFailureExitsOne) {
  ASSERT_EQ(run(dir, "--seed 1 synth --tokens tokens.txt --lexicon lexicon.tsv --text text.tsv --out-dir em"), 0)
      << err();
  cliws::put(dir / "bad.tsv", slurp(dir / "em/manifest.tsv") + "ghost\tem/ghost.emat\n");
  ASSERT_EQ(run(dir, "lm-train --text train.txt --out lm.arpa"), 0);
  EXPECT_EQ(run(dir,
                "pseudo-label --tokens tokens.txt --lexicon lexicon.tsv --lm lm.arpa --manifest bad.tsv "
                "--out labels.tsv --errors errors.tsv"),
            1);
  EXPECT_NE(slurp(dir / "errors.tsv").find("ghost"), std::string::npos);
  EXPECT_EQ(slurp(dir / "labels.tsv").find("ghost"), std::string::npos);
}

TEST_F(Cli, ZeroLmModeEqualsZeroWeights) {
  ASSERT_EQ(run(dir, "--seed 3 synth --tokens tokens.txt --lexicon lexicon.tsv --text text.tsv --out-dir em --noise 0.5"),
            0);
  ASSERT_EQ(run(dir, "lm-train --text train.txt --out lm.arpa"), 0);
  std::string common = "decode --tokens tokens.txt --lexicon lexicon.tsv --lm lm.arpa --manifest em/manifest.tsv --nbest 5";
  ASSERT_EQ(run(dir, common + " --mode zerolm_ctc --out a.tsv"), 0) << err();
  ASSERT_EQ(run(dir, common + " --lm-weight 0 --word-insertion 0 --out b.tsv"), 0) << err();
  EXPECT_EQ(slurp(dir / "a.tsv"), slurp(dir / "b.tsv"));
  EXPECT_FALSE(slurp(dir / "a.tsv").empty());
}

TEST_F(Cli, NoiselessPseudoLabelsRoundTrip) {
  ASSERT_EQ(run(dir, "synth --tokens tokens.txt --lexicon lexicon.tsv --text text.tsv --out-dir em0"), 0);
  ASSERT_EQ(run(dir, "lm-train --text train.txt --out lm.arpa"), 0);
  ASSERT_EQ(run(dir,
                "pseudo-label --tokens tokens.txt --lexicon lexicon.tsv --lm lm.arpa --lm-weight 0.5 "
                "--manifest em0/manifest.tsv --out labels.tsv"),
            0)
      << err();
  ASSERT_EQ(run(dir, "wer text.tsv labels.tsv"), 0);
  EXPECT_EQ(out(), "0.00\n");
  EXPECT_EQ(run(dir, "lm-train --text labels.tsv --order 2 --out relabel.arpa"), 0) << err();
}

TEST_F(Cli, ConfigFillsMissingFlagsOnly) {
  ASSERT_EQ(run(dir, "synth --tokens tokens.txt --lexicon lexicon.tsv --text text.tsv --out-dir em --noise 0.5"), 0);
  ASSERT_EQ(run(dir, "lm-train --text train.txt --out lm.arpa"), 0);
  std::string common = "decode --tokens tokens.txt --lexicon lexicon.tsv --lm lm.arpa --manifest em/manifest.tsv";
  ASSERT_EQ(run(dir, "--config config.txt " + common + " --out a.tsv"), 0) << err();
  ASSERT_EQ(run(dir, common + " --beam 8 --lm-weight 0.4 --nbest 3 --out b.tsv"), 0) << err();
  EXPECT_EQ(slurp(dir / "a.tsv"), slurp(dir / "b.tsv"));
  ASSERT_EQ(run(dir, "--config config.txt " + common + " --nbest 1 --out c.tsv"), 0) << err();
  ASSERT_EQ(run(dir, common + " --beam 8 --lm-weight 0.4 --nbest 1 --out d.tsv"), 0) << err();
  EXPECT_EQ(slurp(dir / "c.tsv"), slurp(dir / "d.tsv"));
  cliws::put(dir / "broken.txt", "beam\n");
  EXPECT_EQ(run(dir, "--config broken.txt " + common), 2);
}

TEST_F(Cli, CorpusFilterOutputs) {
  ASSERT_EQ(run(dir,
                "corpus-filter --corpus corpus.tsv --held-out held.tsv --verdicts verdicts.tsv --kept kept.txt "
                "--removed removed.tsv --pending pending.tsv"),
            0)
      << err();
  EXPECT_EQ(slurp(dir / "kept.txt"), "b2\nb3\n");
  auto removed = slurp(dir / "removed.tsv");
  EXPECT_NE(removed.find("b1"), std::string::npos);
  EXPECT_NE(removed.find("b4"), std::string::npos);
  EXPECT_NE(removed.find("b5"), std::string::npos);
  EXPECT_NE(slurp(dir / "pending.tsv").find("b3\th4"), std::string::npos);
}

TEST_F(Cli, ScriptIsDeterministic) {
  std::string f1, f2;
  auto a = cliws::runScript(dir / "a", &f1);
  auto b = cliws::runScript(dir / "b", &f2);
  EXPECT_EQ(f1, "");
  EXPECT_EQ(f2, "");
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, bytes] : a) {
    EXPECT_EQ(bytes, b[name]) << name;
  }
}
