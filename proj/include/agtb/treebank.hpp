#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace agtb {

/// One treebank token. `postag` is the 9-position AGDT morphological tag:
/// position 1 = part of speech, positions 2-9 = person, number, tense, mood,
/// voice, gender, case, degree; '-' marks an unset position.
struct Token {
  int id = 0;  // 1-based within the sentence
  std::string form;
  std::string lemma;
  std::string postag = "---------";
  int head = 0;  // 0 = artificial root
  std::string relation;
  bool elliptical = false;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string sentence_id;
  std::string provenance;  // document identifier
  std::vector<Token> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Sentence&) const = default;
};

struct YearMonth {
  int year = 0;  // negative = BCE
  int month = 1;
  auto operator<=>(const YearMonth&) const = default;
};

struct DocumentMeta {
  std::string cts_urn;
  std::string author;
  std::string title;
  YearMonth date_start;
  YearMonth date_end;
  std::uint64_t token_count = 0;
  std::string genre;  // optional catalog column, may be empty
};

struct TreeVerdict {
  enum class Kind { Ok, Cycle, MultipleRoots, DanglingHead };
  Kind kind = Kind::Ok;
  std::vector<int> ids;  // cycle members / root children / offending token

  bool ok() const { return kind == Kind::Ok; }
  bool operator==(const TreeVerdict&) const = default;
};

std::string to_string(const TreeVerdict& v);

/// Checks the head graph: no self/out-of-range heads (dangling_head), no
/// cycles, and, when `single_root` is set, at most one child of node 0.
/// Acyclic + in-range heads imply every token reaches the root.
TreeVerdict validate_tree(const Sentence& s, bool single_root = false);

inline constexpr int kPostagLen = 9;

/// Feature keys for tag positions 2-9, in positional order.
extern const char* const kFeatureKeys[8];

using Feats = std::vector<std::pair<std::string, std::string>>;

/// Positions 2-9 of a 9-char tag as key=value pairs, sorted by key; '-'
/// positions are omitted. Throws MalformedTag unless the tag has exactly 9
/// characters.
Feats postag_to_feats(const std::string& postag);

/// Inverse of postag_to_feats given the POS character for position 1.
/// Throws MalformedTag on unknown keys or non-single-character values.
std::string feats_to_postag(char pos, const Feats& feats);

/// Pads short tags with '-' on the right; replaces over-long or empty tags
/// with the all-unset tag. Sets *changed when the input was altered.
std::string sanitize_postag(const std::string& raw, bool* changed = nullptr);

}  // namespace agtb
