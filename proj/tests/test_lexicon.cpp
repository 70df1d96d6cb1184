#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "plkit/lexicon.h"

using namespace plkit;

namespace {

TokenInventory letters() { return TokenInventory({"<blank>", "</s>", "|", "a", "b", "c"}); }

} // namespace

TEST(Inventory, RequiresReservedTokens) {
  EXPECT_THROW(TokenInventory({"a", "b"}), InvalidArgument);
  EXPECT_THROW(TokenInventory({"<blank>", "a"}), InvalidArgument);
  auto inv = letters();
  EXPECT_EQ(inv.blank(), 0);
  EXPECT_EQ(inv.eos(), 1);
  EXPECT_EQ(inv.find("c"), 5);
  EXPECT_FALSE(inv.find("z").has_value());
}

TEST(Lexicon, ParsesAndReportsLine) {
  auto inv = letters();
  std::istringstream in("ab\ta b |\nab\ta b b |\nc\tc |\n");
  auto lex = parseLexicon(in, inv);
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.entry(0).spellings.size(), 2u);
  EXPECT_EQ(lex.totalTokens(), 9u);

  std::istringstream bad("ab\ta b |\nzz\tz z\n");
  try {
    parseLexicon(bad, inv);
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream dup("ab\ta b\nab\ta b\n");
  EXPECT_THROW(parseLexicon(dup, inv), FormatError);
  std::istringstream empty("ab\t\n");
  EXPECT_THROW(parseLexicon(empty, inv), FormatError);
}

TEST(Lexicon, WriteParseRoundTrip) {
  auto inv = letters();
  std::istringstream in("ab\ta b |\nba\tb a |\nba\tb b a |\n");
  auto lex = parseLexicon(in, inv);
  std::ostringstream out;
  writeLexicon(lex, inv, out);
  std::istringstream again(out.str());
  auto lex2 = parseLexicon(again, inv);
  ASSERT_EQ(lex2.size(), lex.size());
  for (std::size_t i = 0; i < lex.size(); ++i) {
    EXPECT_EQ(lex.entry(i).word, lex2.entry(i).word);
    EXPECT_EQ(lex.entry(i).spellings, lex2.entry(i).spellings);
  }
}

TEST(Trie, SharedPrefixesAndHomophones) {
  auto inv = letters();
  std::istringstream in("a\ta\nab\ta b\nab2\ta b\nb\tb\n");
  LexiconTrie trie(parseLexicon(in, inv));
  auto na = trie.child(LexiconTrie::kRoot, 3);
  ASSERT_NE(na, LexiconTrie::kNone);
  EXPECT_EQ(trie.node(na).words.size(), 1u);
  auto nab = trie.child(na, 4);
  ASSERT_NE(nab, LexiconTrie::kNone);
  EXPECT_EQ(trie.node(nab).words.size(), 2u);
  EXPECT_TRUE(trie.node(nab).children.empty());
  EXPECT_EQ(trie.child(LexiconTrie::kRoot, 5), LexiconTrie::kNone);
  EXPECT_EQ(trie.nodeCount(), 4u);
}

TEST(Trie, RandomLexiconsStayCompact) {
  TokenInventory inv({"<blank>", "</s>", "a", "b", "c", "d"});
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    Lexicon lex;
    for (int w = 0; w < 30; ++w) {
      std::vector<TokenId> s;
      for (int k = 1 + static_cast<int>(rng() % 4); k > 0; --k) s.push_back(2 + static_cast<TokenId>(rng() % 4));
      try {
        lex.add("w" + std::to_string(w), s, inv.size());
      } catch (const InvalidArgument&) {
      }
    }
    LexiconTrie trie(lex);
    EXPECT_LE(trie.nodeCount(), 1 + trie.lexicon().totalTokens());
    for (std::size_t i = 0; i < trie.lexicon().size(); ++i) {
      for (const auto& sp : trie.lexicon().entry(i).spellings) {
        auto node = trie.descend(sp);
        ASSERT_NE(node, LexiconTrie::kNone);
        const auto& words = trie.node(node).words;
        EXPECT_NE(std::find(words.begin(), words.end(), static_cast<int32_t>(i)), words.end());
      }
    }
  }
}
