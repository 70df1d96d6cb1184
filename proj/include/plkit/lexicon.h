#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "plkit/common.h"

namespace plkit {

inline constexpr std::string_view kDefaultBlank = "<blank>";
inline constexpr std::string_view kDefaultEos = "</s>";
inline constexpr std::string_view kDefaultWordBoundary = "_";

// Acoustic-model output units. Line index in the inventory file is the id.
class TokenInventory {
 public:
  TokenInventory(
      std::vector<std::string> tokens,
      std::string_view blank = kDefaultBlank,
      std::string_view eos = kDefaultEos);

  static TokenInventory load(std::istream& in, std::string_view blank = kDefaultBlank, std::string_view eos = kDefaultEos);
  static TokenInventory loadFile(const std::string& path, std::string_view blank = kDefaultBlank, std::string_view eos = kDefaultEos);

  std::size_t size() const { return tokens_.size(); }
  TokenId blank() const { return blank_; }
  TokenId eos() const { return eos_; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId blank_ = kNoToken;
  TokenId eos_ = kNoToken;
};

// word -> one or more token spellings, in file order.
class Lexicon {
 public:
  struct Entry {
    std::string word;
    std::vector<std::vector<TokenId>> spellings;
  };

  // Throws InvalidArgument on an empty spelling, a duplicate (word, spelling)
  // pair, or a token id outside [0, inventory_size).
  void add(std::string_view word, std::vector<TokenId> spelling, std::size_t inventory_size);

  std::size_t size() const { return entries_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::optional<std::size_t> find(std::string_view word) const;
  std::size_t totalTokens() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// "word<TAB>tok tok tok" per line. Errors name the 1-based line number.
Lexicon parseLexicon(std::istream& in, const TokenInventory& inventory);
Lexicon loadLexiconFile(const std::string& path, const TokenInventory& inventory);
void writeLexicon(const Lexicon& lexicon, const TokenInventory& inventory, std::ostream& out);

// Deterministic prefix trie over token spellings. Node 0 is the root.
class LexiconTrie {
 public:
  using NodeId = int32_t;
  static constexpr NodeId kRoot = 0;
  static constexpr NodeId kNone = -1;

  struct Node {
    // Sorted by token id.
    std::vector<std::pair<TokenId, NodeId>> children;
    // Lexicon entry indices completed exactly here.
    std::vector<int32_t> words;
  };

  explicit LexiconTrie(Lexicon lexicon);

  std::size_t nodeCount() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  NodeId child(NodeId parent, TokenId token) const;
  // Walks a spelling from the root; kNone if it leaves the trie.
  NodeId descend(std::span<const TokenId> path) const;
  const Lexicon& lexicon() const { return lexicon_; }

 private:
  Lexicon lexicon_;
  std::vector<Node> nodes_;
};

} // namespace plkit
