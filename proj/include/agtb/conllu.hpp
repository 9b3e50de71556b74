#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "agtb/treebank.hpp"

namespace agtb {

/// 10-column CoNLL-U. Column mapping: ID, FORM, LEMMA, UPOS = tag position 1,
/// XPOS = the full 9-character tag, FEATS = pipe-joined sorted key=value
/// pairs, HEAD, DEPREL = relation, DEPS = "_", MISC = "Ellipsis=Yes" for
/// elliptical tokens. `# sent_id` / `# doc_id` comments carry sentence id and
/// provenance. Multiword ranges (1-2) and empty nodes (1.1) are unsupported.
std::vector<Sentence> read_conllu(std::string_view bytes);

std::string write_conllu(const std::vector<Sentence>& sentences);
std::string write_conllu(const Sentence& sentence);

}  // namespace agtb
