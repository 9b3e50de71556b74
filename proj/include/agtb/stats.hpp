#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "agtb/treebank.hpp"

namespace agtb {

struct StatsReport {
  std::map<std::string, std::uint64_t> per_document;  // provenance -> tokens
  std::uint64_t total = 0;
  // Filled when a catalog is supplied; keys are author / genre / century
  // (century from the start date, rendered with an explicit sign).
  std::map<std::string, std::uint64_t> per_author;
  std::map<std::string, std::uint64_t> per_genre;
  std::map<std::string, std::uint64_t> per_century;
  std::vector<std::string> warnings;  // catalog mismatches
};

StatsReport corpus_stats(const std::vector<Sentence>& corpus,
                         const std::vector<DocumentMeta>& catalog);

std::string render_stats(const StatsReport& report);

}  // namespace agtb
