#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "agtb/treebank.hpp"

namespace agtb {

/// One component of a fused-token split. The first component of a group
/// inherits the original token's head and relation; later components attach
/// to an earlier component of the same group (`anchor`, 1-based within the
/// group) with the template relation.
struct SplitComponent {
  std::string form;
  std::string lemma;
  std::string postag = "---------";
  std::string relation;  // empty for the first component
  int anchor = 0;        // 0 for the first component
};

struct NormalizationConfig {
  std::vector<char32_t> apostrophe_sources;
  std::vector<std::string> suffixes_to_strip;
  std::map<std::string, std::vector<SplitComponent>> split_lexicon;
  enum class CycleRepair { ReattachToRoot } cycle_repair = CycleRepair::ReattachToRoot;
  bool single_root_enforce = false;

  /// Documented defaults: sources {U+0027, U+2019, U+1FBD, U+1FBF, U+0315,
  /// U+A78C}, suffixes [_CO, _AP], and a two-entry conjunction lexicon.
  static NormalizationConfig defaults();

  /// Flat key-value text; keys match the field names. `split_lexicon` lines
  /// may repeat:
  ///   split_lexicon = FUSED -> form|lemma|postag|*|* + form|lemma|postag|REL|ANCHOR
  /// Template strings are apostrophe-normalized at load; component forms must
  /// not themselves be lexicon keys and anchors must point to an earlier
  /// component, or loading fails with InvalidConfig.
  static NormalizationConfig from_text(std::string_view text);

  std::string to_text() const;
};

struct NormalizationReport {
  std::size_t apostrophes_changed = 0;
  std::size_t suffixes_stripped = 0;
  std::size_t tokens_split = 0;
  std::size_t ellipses_relocated = 0;
  std::size_t cycles_repaired = 0;

  NormalizationReport& operator+=(const NormalizationReport& other);
  bool operator==(const NormalizationReport&) const = default;
};

std::string render_report(const NormalizationReport& report);

/// Replaces every configured apostrophe codepoint in forms and lemmas with
/// U+02BC; returns the number of replaced codepoints.
std::size_t normalize_apostrophes(Sentence& s, const NormalizationConfig& config);

/// Apostrophe replacement on a bare string (used for lemma comparison).
std::size_t normalize_apostrophes(std::string& text, const NormalizationConfig& config);

/// Removes the longest configured suffix, once, from the end of each
/// relation; returns the number of tokens changed. One pass only: a label
/// with stacked suffixes loses the outermost one per run.
std::size_t strip_label_suffixes(Sentence& s, const NormalizationConfig& config);

/// Replaces lexicon-matched tokens by their components, reindexing all ids
/// and heads; returns the number of tokens split.
std::size_t split_fused_conjunctions(Sentence& s, const NormalizationConfig& config);

/// Moves elliptical tokens to the sentence end (original relative order),
/// renames their forms to [0], [1], ... and remaps heads; returns the number
/// of elliptical tokens whose position or form changed.
std::size_t relocate_ellipsis(Sentence& s);

/// Reattaches dangling heads to the root, then breaks each cycle by setting
/// the smallest-id member's head to 0 until the tree validates; with
/// single_root_enforce, extra root children are reattached to the
/// smallest-id root child. Returns dangling+cycle repairs.
std::size_t repair_cycles(Sentence& s, const NormalizationConfig& config);

/// Full pipeline: apostrophes, suffix strip, conjunction split, cycle
/// repair, ellipsis relocation. Idempotent; output passes validate_tree.
NormalizationReport normalize_pipeline(Sentence& s, const NormalizationConfig& config);

}  // namespace agtb
