#include "agtb/stats.hpp"

#include <sstream>

#include "agtb/catalog.hpp"

namespace agtb {

StatsReport corpus_stats(const std::vector<Sentence>& corpus,
                         const std::vector<DocumentMeta>& catalog) {
  StatsReport r;
  for (const Sentence& s : corpus) {
    const std::string key = s.provenance.empty() ? "(unknown)" : s.provenance;
    r.per_document[key] += static_cast<std::uint64_t>(s.size());
    r.total += static_cast<std::uint64_t>(s.size());
  }
  if (catalog.empty()) return r;

  std::map<std::string, const DocumentMeta*> by_urn;
  for (const DocumentMeta& meta : catalog) by_urn[meta.cts_urn] = &meta;
  for (const auto& [doc, count] : r.per_document) {
    const auto it = by_urn.find(doc);
    if (it == by_urn.end()) {
      r.warnings.push_back("document '" + doc + "' is not in the catalog");
      continue;
    }
    const DocumentMeta& meta = *it->second;
    r.per_author[meta.author.empty() ? "(unknown)" : meta.author] += count;
    if (!meta.genre.empty()) r.per_genre[meta.genre] += count;
    const int century = century_of(meta.date_start.year);
    r.per_century[(century > 0 ? "+" : "") + std::to_string(century)] += count;
  }
  return r;
}

std::string render_stats(const StatsReport& r) {
  std::ostringstream os;
  os << "total = " << r.total << "\n";
  for (const auto& [doc, count] : r.per_document) os << "document " << doc << " = " << count << "\n";
  for (const auto& [author, count] : r.per_author) os << "author " << author << " = " << count << "\n";
  for (const auto& [genre, count] : r.per_genre) os << "genre " << genre << " = " << count << "\n";
  for (const auto& [century, count] : r.per_century) os << "century " << century << " = " << count << "\n";
  return os.str();
}

}  // namespace agtb
