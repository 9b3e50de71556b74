#pragma once

#include <string_view>
#include <vector>

#include "agtb/treebank.hpp"

namespace agtb {

/// Tab-separated document catalog: cts_urn, author, title, date_range,
/// token_count, and an optional genre column. date_range is
/// `<start>/<end>` with each bound `±YYYY-MM`; the minus sign may be ASCII
/// '-' or U+2212. Lines starting with '#' are skipped.
std::vector<DocumentMeta> read_catalog(std::string_view bytes);

/// Century of a year under the usual convention (no year zero):
/// 75 CE -> 1, -430 -> -5.
int century_of(int year);

}  // namespace agtb
