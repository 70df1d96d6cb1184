#include "plkit/lexicon.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace plkit {

TokenInventory::TokenInventory(std::vector<std::string> tokens, std::string_view blank, std::string_view eos)
    : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) {
      throw InvalidArgument("empty token at index " + std::to_string(i));
    }
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw InvalidArgument("duplicate token '" + tokens_[i] + "'");
    }
  }
  auto b = find(blank);
  auto e = find(eos);
  if (!b) {
    throw InvalidArgument("token inventory lacks blank token '" + std::string(blank) + "'");
  }
  if (!e) {
    throw InvalidArgument("token inventory lacks end-of-sentence token '" + std::string(eos) + "'");
  }
  if (*b == *e) {
    throw InvalidArgument("blank and end-of-sentence tokens must differ");
  }
  blank_ = *b;
  eos_ = *e;
}

TokenInventory TokenInventory::load(std::istream& in, std::string_view blank, std::string_view eos) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty()) {
      continue;
    }
    tokens.emplace_back(t);
  }
  return TokenInventory(std::move(tokens), blank, eos);
}

TokenInventory TokenInventory::loadFile(const std::string& path, std::string_view blank, std::string_view eos) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open token inventory '" + path + "'");
  }
  return load(in, blank, eos);
}

std::optional<TokenId> TokenInventory::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void Lexicon::add(std::string_view word, std::vector<TokenId> spelling, std::size_t inventory_size) {
  if (word.empty()) {
    throw InvalidArgument("empty word");
  }
  if (spelling.empty()) {
    throw InvalidArgument("empty spelling for word '" + std::string(word) + "'");
  }
  for (TokenId t : spelling) {
    if (t < 0 || static_cast<std::size_t>(t) >= inventory_size) {
      throw InvalidArgument("token id " + std::to_string(t) + " outside inventory");
    }
  }
  auto [it, inserted] = index_.emplace(std::string(word), entries_.size());
  if (inserted) {
    entries_.push_back({std::string(word), {}});
  }
  auto& spellings = entries_[it->second].spellings;
  if (std::find(spellings.begin(), spellings.end(), spelling) != spellings.end()) {
    throw InvalidArgument("duplicate spelling for word '" + std::string(word) + "'");
  }
  spellings.push_back(std::move(spelling));
}

std::optional<std::size_t> Lexicon::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::size_t Lexicon::totalTokens() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    for (const auto& s : e.spellings) {
      n += s.size();
    }
  }
  return n;
}

Lexicon parseLexicon(std::istream& in, const TokenInventory& inventory) {
  Lexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto where = [&] { return "lexicon line " + std::to_string(line_no) + ": "; };
    if (trim(line).empty()) {
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(where() + "expected 'word<TAB>tokens'");
    }
    auto word = trim(std::string_view(line).substr(0, tab));
    auto pieces = splitWhitespace(std::string_view(line).substr(tab + 1));
    if (word.empty()) {
      throw FormatError(where() + "empty word");
    }
    if (pieces.empty()) {
      throw FormatError(where() + "empty spelling for '" + std::string(word) + "'");
    }
    std::vector<TokenId> spelling;
    spelling.reserve(pieces.size());
    for (const auto& p : pieces) {
      auto id = inventory.find(p);
      if (!id) {
        throw FormatError(where() + "unknown token '" + p + "'");
      }
      spelling.push_back(*id);
    }
    try {
      lex.add(word, std::move(spelling), inventory.size());
    } catch (const InvalidArgument& e) {
      throw FormatError(where() + e.what());
    }
  }
  return lex;
}

Lexicon loadLexiconFile(const std::string& path, const TokenInventory& inventory) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open lexicon '" + path + "'");
  }
  return parseLexicon(in, inventory);
}

void writeLexicon(const Lexicon& lexicon, const TokenInventory& inventory, std::ostream& out) {
  for (const auto& e : lexicon.entries()) {
    for (const auto& s : e.spellings) {
      out << e.word << '\t';
      for (std::size_t i = 0; i < s.size(); ++i) {
        out << (i ? " " : "") << inventory.token(s[i]);
      }
      out << '\n';
    }
  }
}

LexiconTrie::LexiconTrie(Lexicon lexicon) : lexicon_(std::move(lexicon)) {
  nodes_.emplace_back();
  // Children are collected unsorted, then sorted once.
  std::vector<std::vector<std::pair<TokenId, NodeId>>> pending(1);
  auto child_of = [&](NodeId parent, TokenId t) -> NodeId {
    auto& kids = pending[static_cast<std::size_t>(parent)];
    for (const auto& [tok, id] : kids) {
      if (tok == t) {
        return id;
      }
    }
    auto id = static_cast<NodeId>(nodes_.size());
    nodes_.emplace_back();
    pending.emplace_back();
    pending[static_cast<std::size_t>(parent)].emplace_back(t, id);
    return id;
  };
  // Linear child scans get slow at the root of a large lexicon; index the
  // first level directly.
  std::unordered_map<TokenId, NodeId> root_children;
  for (std::size_t w = 0; w < lexicon_.size(); ++w) {
    for (const auto& spelling : lexicon_.entry(w).spellings) {
      NodeId cur = kRoot;
      for (std::size_t i = 0; i < spelling.size(); ++i) {
        TokenId t = spelling[i];
        if (i == 0) {
          auto it = root_children.find(t);
          if (it == root_children.end()) {
            auto id = static_cast<NodeId>(nodes_.size());
            nodes_.emplace_back();
            pending.emplace_back();
            pending[0].emplace_back(t, id);
            root_children.emplace(t, id);
            cur = id;
          } else {
            cur = it->second;
          }
        } else {
          cur = child_of(cur, t);
        }
      }
      auto& words = nodes_[static_cast<std::size_t>(cur)].words;
      if (std::find(words.begin(), words.end(), static_cast<int32_t>(w)) == words.end()) {
        words.push_back(static_cast<int32_t>(w));
      }
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& kids = pending[i];
    std::sort(kids.begin(), kids.end());
    nodes_[i].children = std::move(kids);
  }
}

LexiconTrie::NodeId LexiconTrie::child(NodeId parent, TokenId token) const {
  const auto& kids = nodes_[static_cast<std::size_t>(parent)].children;
  auto it = std::lower_bound(
      kids.begin(), kids.end(), token, [](const std::pair<TokenId, NodeId>& c, TokenId t) { return c.first < t; });
  if (it == kids.end() || it->first != token) {
    return kNone;
  }
  return it->second;
}

LexiconTrie::NodeId LexiconTrie::descend(std::span<const TokenId> path) const {
  NodeId cur = kRoot;
  for (TokenId t : path) {
    cur = child(cur, t);
    if (cur == kNone) {
      return kNone;
    }
  }
  return cur;
}

} // namespace plkit
