#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "agtb/treebank.hpp"

namespace agtb {

struct XmlReadResult {
  std::vector<Sentence> sentences;
  std::vector<std::string> warnings;
};

/// Reads AGDT-style treebank XML: any `sentence` element contributes one
/// Sentence built from its `word` descendants' attributes (id, form, lemma,
/// postag, head, relation, optional artificial). Sanitizable defects (missing
/// lemma/relation, non-numeric or out-of-range heads, malformed tags, id
/// gaps) are repaired with one warning each; structural defects (malformed
/// markup, duplicate ids, empty sentences) throw. Safe on arbitrary bytes.
XmlReadResult read_agdt_xml(std::string_view bytes);

}  // namespace agtb
